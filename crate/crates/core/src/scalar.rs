//! Scalar abstraction for the numerical kernels (integrator, quadrature,
//! tridiagonal counts). Domain code above the kernels works in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// f32 or f64.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Lossy literal conversion; panics only for values no float can hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
