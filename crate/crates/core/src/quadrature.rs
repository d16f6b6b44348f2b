//! Gauss–Legendre rules and tanh–sinh quadrature (the latter for endpoint
//! singular integrands in the reference oracles).

use std::sync::OnceLock;

use crate::scalar::Real;

/// n-point Gauss–Legendre nodes and weights on [−1, 1] (Newton on P_n).
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = T::lit(-z);
        x[n - 1 - i] = T::lit(z);
        w[i] = T::lit(wi);
        w[n - 1 - i] = T::lit(wi);
    }
    (x, w)
}

/// Cached 8-point rule used by the profile quadratures.
pub fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// ∫_a^b f on a single interval with the cached 8-point rule.
pub fn gl8_interval<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let (x, w) = gl8();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for k in 0..x.len() {
        s += w[k] * f(c + h * x[k]);
    }
    s * h
}

/// Tanh–sinh quadrature of f over [a, b]. The integrand receives
/// `(x, x − a, b − x)` so endpoint-singular factors can be formed without
/// cancellation. Refines until successive levels agree to `tol` (relative).
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut h = 1.0f64;
    let tmax = 6.5;
    let mut eval = |t: f64| -> f64 {
        let s = pi2 * t.sinh();
        let cosh_s = s.cosh();
        let dw = pi2 * t.cosh() / (cosh_s * cosh_s);
        // distance from the nearer endpoint in [−1,1] coordinates: 1 − |tanh s| = e^{−|s|}/cosh s
        let comp = (-s.abs()).exp() / cosh_s;
        let (da, db) = if s < 0.0 { (half * comp, half * (2.0 - comp)) } else { (half * (2.0 - comp), half * comp) };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if s < 0.0 { a + da } else { b - db };
        let v = f(x, da, db) * dw;
        if v.is_finite() { v } else { 0.0 }
    };
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut prev = sum * h * half;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let cur = sum * h * half;
        if (cur - prev).abs() <= tol * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}
