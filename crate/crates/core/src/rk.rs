//! Dormand–Prince 5(4) with the standard 4th-order continuous extension.
//!
//! Generic over the scalar and the state dimension. Integrates forward or
//! backward (sign of `t_end - t0`). After each accepted step the caller sees
//! the dense interpolant and may stop the run.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct RkOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Error weight floor as a fraction of the running peak of each component.
    /// Zero gives the classic `atol + rtol*|y|` weights.
    pub peak_frac: T,
    pub h_init: Option<T>,
    pub h_max: T,
    /// Cap steps at `h_rel·(|t| + h_rel_floor)` so dense nodes stay usable for
    /// interpolation even when the error estimate is tiny. Infinite disables.
    pub h_rel: T,
    pub h_rel_floor: T,
    pub max_steps: usize,
}

impl<T: Real> Default for RkOptions<T> {
    fn default() -> Self {
        RkOptions {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-14),
            peak_frac: T::zero(),
            h_init: None,
            h_max: T::infinity(),
            h_rel: T::infinity(),
            h_rel_floor: T::one(),
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RkError<T> {
    StepUnderflow(T),
    NonFinite(T),
    TooManySteps(T),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
    pub nfev: usize,
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct Dense<T, const N: usize> {
    pub t0: T,
    pub h: T,
    rc: [[T; N]; 5],
}

impl<T: Real, const N: usize> Dense<T, N> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    pub fn eval(&self, t: T) -> [T; N] {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let mut y = [T::zero(); N];
        for i in 0..N {
            let r = &self.rc;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }

    /// Find a root of `g(eval(t))` inside the step, given opposite signs at
    /// the ends. Bisection to the roundoff of `t`.
    pub fn bisect_event<G: Fn(&[T; N]) -> T>(&self, g: G) -> T {
        let (mut a, mut b) = (self.t0, self.t1());
        let ga = g(&self.eval(a));
        for _ in 0..200 {
            let m = (a + b) * T::lit(0.5);
            if m == a || m == b {
                break;
            }
            let gm = g(&self.eval(m));
            if (gm > T::zero()) == (ga > T::zero()) {
                a = m;
            } else {
                b = m;
            }
        }
        b
    }
}

pub enum Flow {
    Continue,
    Stop,
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = T::zero();
        for (c, k) in terms {
            s = s + T::lit(*c) * k[i];
        }
        out[i] = out[i] + h * s;
    }
    out
}

fn finite<T: Real, const N: usize>(y: &[T; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// Returns the final time reached (earlier than `t_end` when the callback
/// stopped the run) and the state there.
pub fn integrate<T, const N: usize, F, C>(
    mut f: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    opts: &RkOptions<T>,
    mut on_step: C,
) -> Result<(T, [T; N], RkStats), RkError<T>>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
    C: FnMut(&Dense<T, N>, &[T; N]) -> Flow,
{
    let mut stats = RkStats::default();
    let dir = if t_end >= t0 { T::one() } else { -T::one() };
    let mut t = t0;
    let mut y = y0;
    if t == t_end {
        return Ok((t, y, stats));
    }
    let mut k1 = f(t, &y);
    stats.nfev += 1;
    if !finite(&k1) {
        return Err(RkError::NonFinite(t));
    }
    let mut peak = [T::zero(); N];
    for i in 0..N {
        peak[i] = y[i].abs();
    }
    let weight = |i: usize, a: T, b: T, peak: &[T; N]| {
        opts.atol + opts.rtol * a.abs().max(b.abs()).max(opts.peak_frac * peak[i])
    };

    let span = (t_end - t0).abs();
    let hmax = opts.h_max.min(span);
    let mut h = match opts.h_init {
        Some(h) => h.abs().min(hmax),
        None => {
            // Hairer's starting-step heuristic.
            let mut d0 = T::zero();
            let mut d1 = T::zero();
            for i in 0..N {
                let sc = weight(i, y[i], y[i], &peak);
                d0 = d0 + (y[i] / sc).powi(2);
                d1 = d1 + (k1[i] / sc).powi(2);
            }
            let nn = T::lit(N as f64);
            d0 = (d0 / nn).sqrt();
            d1 = (d1 / nn).sqrt();
            let mut h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
                T::lit(1e-6) * t.abs().max(T::one())
            } else {
                T::lit(0.01) * d0 / d1
            };
            h0 = h0.min(hmax);
            let y1 = axpy(&y, dir * h0, &[(1.0, &k1)]);
            let k2 = f(t + dir * h0, &y1);
            stats.nfev += 1;
            let mut d2 = T::zero();
            for i in 0..N {
                let sc = weight(i, y[i], y[i], &peak);
                d2 = d2 + ((k2[i] - k1[i]) / sc).powi(2);
            }
            d2 = (d2 / nn).sqrt() / h0;
            let dm = d1.max(d2);
            let h1 = if dm <= T::lit(1e-15) {
                (h0 * T::lit(1e-3)).max(T::lit(1e-6) * t.abs().max(T::one()))
            } else {
                (T::lit(0.01) / dm).powf(T::lit(0.2))
            };
            // h1 assumes an O(1) time scale; h0 is scale-aware, so never go
            // below it (matters far from the origin, where ε·|t| is large).
            (T::lit(100.0) * h0).min(h1.max(h0)).min(hmax)
        }
    };

    let safe = T::lit(0.9);
    let beta = T::lit(0.04);
    let expo1 = T::lit(0.2) - beta * T::lit(0.75);
    let facc1 = T::lit(5.0);
    let facc2 = T::lit(0.1);
    let mut facold = T::lit(1e-4);
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(RkError::TooManySteps(t));
        }
        h = h.min(opts.h_rel * (t.abs() + opts.h_rel_floor));
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining * T::lit(0.999_999_999_999) {
            h = remaining;
            last = true;
        }
        if h <= T::epsilon() * t.abs().max(T::lit(1e-300)) * T::lit(4.0) || h <= T::min_positive_value() {
            return Err(RkError::StepUnderflow(t));
        }
        let hs = dir * h;
        let y2 = axpy(&y, hs, &[(A21, &k1)]);
        let k2 = f(t + T::lit(C2) * hs, &y2);
        let y3 = axpy(&y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = f(t + T::lit(C3) * hs, &y3);
        let y4 = axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = f(t + T::lit(C4) * hs, &y4);
        let y5 = axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = f(t + T::lit(C5) * hs, &y5);
        let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let tn = if last { t_end } else { t + hs };
        let k6 = f(tn, &y6);
        let yn = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(tn, &yn);
        stats.nfev += 6;

        let ok = finite(&yn) && finite(&k7);
        let mut err = T::zero();
        if ok {
            for i in 0..N {
                let e = hs
                    * (T::lit(E1) * k1[i] + T::lit(E3) * k3[i] + T::lit(E4) * k4[i] + T::lit(E5) * k5[i] + T::lit(E6) * k6[i]
                        + T::lit(E7) * k7[i]);
                let sc = weight(i, y[i], yn[i], &peak);
                err = err + (e / sc).powi(2);
            }
            err = (err / T::lit(N as f64)).sqrt();
        }
        if !ok || !err.is_finite() {
            // Shrink hard and retry; a persistent blow-up ends in underflow.
            stats.rejected += 1;
            h = h * T::lit(0.1);
            last_rejected = true;
            if h <= T::epsilon() * t.abs().max(T::lit(1e-300)) * T::lit(4.0) {
                return Err(RkError::NonFinite(t));
            }
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= T::one() {
            let mut fac = fac11 / facold.powf(beta);
            fac = facc2.max(facc1.min(fac / safe));
            let mut hnew = h / fac;
            facold = err.max(T::lit(1e-4));
            stats.accepted += 1;

            let mut rc = [[T::zero(); N]; 5];
            for i in 0..N {
                let ydiff = yn[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                rc[0][i] = y[i];
                rc[1][i] = ydiff;
                rc[2][i] = bspl;
                rc[3][i] = ydiff - hs * k7[i] - bspl;
                rc[4][i] = hs
                    * (T::lit(D1) * k1[i] + T::lit(D3) * k3[i] + T::lit(D4) * k4[i] + T::lit(D5) * k5[i] + T::lit(D6) * k6[i]
                        + T::lit(D7) * k7[i]);
            }
            let dense = Dense { t0: t, h: hs, rc };
            t = tn;
            y = yn;
            k1 = k7;
            for i in 0..N {
                peak[i] = peak[i].max(y[i].abs());
            }
            if let Flow::Stop = on_step(&dense, &y) {
                return Ok((t, y, stats));
            }
            if last {
                return Ok((t, y, stats));
            }
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
            h = hnew.min(hmax);
        } else {
            stats.rejected += 1;
            h = h / facc1.min(fac11 / safe);
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_f64() {
        let opts = RkOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() };
        let (t, y, _) = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &opts, |_, _| Flow::Continue).unwrap();
        assert_eq!(t, 5.0);
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn harmonic_backward_and_dense() {
        let opts = RkOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let mut worst = 0.0f64;
        let (_, y, _) = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            3.0,
            [3.0f64.sin(), 3.0f64.cos()],
            0.0,
            &opts,
            |d, _| {
                for j in 0..5 {
                    let t = d.t0 + d.h * (j as f64 / 4.0);
                    worst = worst.max((d.eval(t)[0] - t.sin()).abs());
                }
                Flow::Continue
            },
        )
        .unwrap();
        assert!(y[0].abs() < 1e-10 && (y[1] - 1.0).abs() < 1e-10);
        assert!(worst < 1e-8, "dense error {worst}");
    }

    #[test]
    fn works_in_f32() {
        let opts = RkOptions { rtol: 1e-5f32, atol: 1e-7, ..Default::default() };
        let (_, y, _) = integrate(|_, y: &[f32; 1]| [y[0]], 0.0f32, [1.0], 1.0, &opts, |_, _| Flow::Continue).unwrap();
        assert!((y[0] - std::f32::consts::E).abs() < 1e-4);
    }

    #[test]
    fn event_bisection_finds_zero() {
        let opts = RkOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let mut root = None;
        integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 3.0, &opts, |d, y1| {
            if y1[0] <= 0.0 {
                root = Some(d.bisect_event(|y| y[0]));
                return Flow::Stop;
            }
            Flow::Continue
        })
        .unwrap();
        assert!((root.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }
}
