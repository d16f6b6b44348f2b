//! Limit profiles: the Talenti bubble W (closed form), the single-power
//! ground state U† and the half-line singular solution V (both by shooting).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::tanh_sinh;
use crate::radial_ode::{integrate_traced, IntegrateOptions, OdeSpec, Profile};
use crate::shooting::bisect_family;
use crate::special::beta;

/// W(r) = (1 + r²/3)^{−1/2}.
pub fn talenti_value(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("radius {r} must be ≥ 0")));
    }
    Ok((1.0 + r * r / 3.0).powf(-0.5))
}

/// (W, W', W'') in closed form; r ≥ 0 assumed.
pub fn talenti_derivs(r: f64) -> (f64, f64, f64) {
    let t = 1.0 + r * r / 3.0;
    let w = t.powf(-0.5);
    let t3 = w * w * w;
    let t5 = t3 * w * w;
    (w, -r / 3.0 * t3, -t3 / 3.0 + r * r / 3.0 * t5)
}

/// −W'' − (2/r)W' − W⁵, using −3W''(0) = W(0)⁵ at the origin.
pub fn talenti_residual(r: f64) -> f64 {
    let (w, d1, d2) = talenti_derivs(r);
    if r == 0.0 {
        -3.0 * d2 - w.powi(5)
    } else {
        -d2 - 2.0 * d1 / r - w.powi(5)
    }
}

/// ‖W‖_q^q over ℝ³ via the Beta function.
pub fn talenti_lq_norm(q: f64) -> Result<f64> {
    if !(q > 3.0) {
        return Err(Error::NonIntegrable { q });
    }
    Ok(4.0 * PI * 3.0 * 3f64.sqrt() * 0.5 * beta(1.5, 0.5 * (q - 3.0)))
}

/// Same quantity by quadrature after r = √3·tanθ:
/// 4π·3√3 ∫₀^{π/2} sin²θ cos^{q−4}θ dθ.
pub fn talenti_lq_norm_quadrature(q: f64) -> Result<f64> {
    talenti_lq_norm_quadrature_tol(q, 1e-14)
}

pub fn talenti_lq_norm_quadrature_tol(q: f64, tol: f64) -> Result<f64> {
    if !(q > 3.0) {
        return Err(Error::NonIntegrable { q });
    }
    let v = tanh_sinh(0.0, FRAC_PI_2, tol, |th, _, db| {
        let s = th.sin();
        s * s * db.sin().powf(q - 4.0)
    });
    Ok(4.0 * PI * 3.0 * 3f64.sqrt() * v)
}

/// ‖∇W‖² by quadrature: 4π√3 ∫₀^{π/2} sin⁴θ dθ.
pub fn talenti_grad_norm_quadrature() -> f64 {
    let v = tanh_sinh(0.0, FRAC_PI_2, 1e-14, |th, _, _| th.sin().powi(4));
    4.0 * PI * 3f64.sqrt() * v
}

/// Sobolev constant σ = (‖W‖₆⁶)^{2/3}.
pub fn sigma_constant() -> f64 {
    talenti_lq_norm(6.0).unwrap().powf(2.0 / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReferenceKind {
    UStar,
    SingularV,
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub p: f64,
    pub profile: Profile,
    pub central_value: f64,
    /// Relative mismatch between start series and integration at 2·s_start
    /// (singular equation only; zero otherwise).
    pub start_residual: f64,
    pub join_residual: f64,
}

pub const USTAR_TOL: f64 = 1e-10;
pub const SINGULAR_START: f64 = 1e-4;

fn opts_for(tol: f64) -> IntegrateOptions {
    IntegrateOptions::default().with_rtol((tol * 1e-2).clamp(1e-13, 1e-6))
}

/// Find a Rebounds → Crosses sign change on a geometric central-value grid.
fn bracket_central(spec: &OdeSpec, lo: f64, hi: f64, n: usize, opts: &IntegrateOptions) -> Result<(f64, f64)> {
    let mut prev: Option<(f64, i8)> = None;
    for k in 0..=n {
        let c = lo * (hi / lo).powf(k as f64 / n as f64);
        let s = integrate_traced(spec, c, opts)?.0.sign();
        if let Some((cp, sp)) = prev {
            if sp > 0 && s < 0 {
                return Ok((cp, c));
            }
        }
        if s != 0 {
            prev = Some((c, s));
        }
    }
    Err(Error::BracketNotFound(format!("no central value in [{lo}, {hi}] separates rebound from crossing")))
}

/// Positive decaying solution of −u'' − (2/r)u' + u − u^p = 0.
pub fn solve_ustar(p: f64) -> Result<ReferenceSolution> {
    solve_ustar_with(p, USTAR_TOL)
}

pub fn solve_ustar_with(p: f64, tol: f64) -> Result<ReferenceSolution> {
    if !(p > 1.0 && p < 5.0) {
        return Err(Error::InvalidInput(format!("p = {p} outside (1, 5)")));
    }
    let spec = OdeSpec::UStarEq { p };
    let opts = opts_for(tol);
    let (lo, hi) = bracket_central(&spec, 1.0001, 1e3, 60, &opts)?;
    let root = bisect_family(|c| (spec.clone(), c), lo, hi, tol, &opts)?;
    Ok(ReferenceSolution { kind: ReferenceKind::UStar, p, central_value: root.x, profile: root.profile, start_residual: 0.0, join_residual: root.join_residual })
}

/// Positive decaying solution of v'' − v + s^{1−p}v^p = 0, v'(0) = 0.
pub fn solve_singular_v(p: f64) -> Result<ReferenceSolution> {
    solve_singular_v_with(p, USTAR_TOL, SINGULAR_START)
}

pub fn solve_singular_v_with(p: f64, tol: f64, s_start: f64) -> Result<ReferenceSolution> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidInput(format!("p = {p} outside (1, 2)")));
    }
    if !(s_start > 0.0 && s_start <= 1e-2) {
        return Err(Error::InvalidInput(format!("start radius {s_start} outside (0, 1e-2]")));
    }
    let spec = OdeSpec::SingularVEq { p };
    let mut opts = opts_for(tol);
    opts.r0 = Some(s_start);
    let (lo, hi) = bracket_central(&spec, 1e-2, 1e2, 60, &opts)?;
    let root = bisect_family(|c| (spec.clone(), c), lo, hi, tol, &opts)?;
    let start_residual = singular_start_residual(&root.profile, s_start);
    if start_residual > 1e-8 {
        return Err(Error::SeriesStart { r: s_start, residual: start_residual });
    }
    Ok(ReferenceSolution {
        kind: ReferenceKind::SingularV,
        p,
        central_value: root.x,
        profile: root.profile,
        start_residual,
        join_residual: root.join_residual,
    })
}

/// Relative mismatch between the start series and the integrated solution at
/// the first node at or beyond 2·s_start.
fn singular_start_residual(prof: &Profile, s_start: f64) -> f64 {
    let i = prof.r.partition_point(|&x| x < 2.0 * s_start).clamp(1, prof.len() - 1);
    let (r, v) = (prof.r[i], prof.u[i]);
    let (vs, _) = prof.spec.series(prof.central, r);
    ((v - vs) / v).abs()
}

/// 3^{−(p−1)/2}·V(0)^{p−1}.
pub fn theta0(p: f64) -> Result<f64> {
    let v = solve_singular_v_cached(p, USTAR_TOL)?;
    Ok(3f64.powf(-(p - 1.0) / 2.0) * v.central_value.powf(p - 1.0))
}

type Key = (ReferenceKind, u64, u64);

fn cache() -> &'static RwLock<HashMap<Key, Arc<ReferenceSolution>>> {
    static C: OnceLock<RwLock<HashMap<Key, Arc<ReferenceSolution>>>> = OnceLock::new();
    C.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cached(kind: ReferenceKind, p: f64, tol: f64, solve: impl FnOnce() -> Result<ReferenceSolution>) -> Result<Arc<ReferenceSolution>> {
    let key = (kind, p.to_bits(), tol.to_bits());
    if let Some(v) = cache().read().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(solve()?);
    cache().write().unwrap().insert(key, v.clone());
    Ok(v)
}

pub fn solve_ustar_cached(p: f64, tol: f64) -> Result<Arc<ReferenceSolution>> {
    cached(ReferenceKind::UStar, p, tol, || solve_ustar_with(p, tol))
}

pub fn solve_singular_v_cached(p: f64, tol: f64) -> Result<Arc<ReferenceSolution>> {
    cached(ReferenceKind::SingularV, p, tol, || solve_singular_v_with(p, tol, SINGULAR_START))
}
