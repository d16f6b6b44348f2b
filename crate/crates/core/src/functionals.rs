//! Norms, functionals and identity residuals of radial profiles.
//!
//! Integrals are 4π∫…r²dr over the profile's own nodes (8-point Gauss on the
//! quintic Hermite interpolant) plus the closed-form integral of the tail
//! model beyond the last node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gl8_interval;
use crate::radial_ode::{Profile, TailModel};
use crate::special::upper_gamma;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// ∫_R^∞ (c e^{−κr}/r)^q r² dr
fn tail_lq(t: &TailModel, q: f64, rl: f64) -> Result<f64> {
    let s = 3.0 - q * t.nu;
    if t.kappa == 0.0 {
        if s >= 0.0 {
            return Err(Error::NonIntegrable { q });
        }
        return Ok(t.c.powf(q) * rl.powf(s) / (-s));
    }
    let lam = q * t.kappa;
    let x = lam * rl;
    // c^q λ^{−s} Γ(s, λR), assembled in logs to avoid overflow of λ^{−s}
    let g = upper_gamma(s, x);
    if g == 0.0 {
        return Ok(0.0);
    }
    Ok((q * t.c.ln() - s * lam.ln()).exp() * g)
}

/// ∫_R^∞ (u')² r² dr for the tail model with ν = 1.
fn tail_grad(t: &TailModel, rl: f64) -> f64 {
    let c2 = t.c * t.c;
    if t.kappa == 0.0 {
        return c2 / rl;
    }
    let k = t.kappa;
    let lam = 2.0 * k;
    let x = lam * rl;
    let e = (-x).exp();
    c2 * (k * k * e / lam + 2.0 * k * upper_gamma(0.0, x) + lam * upper_gamma(-1.0, x))
}

/// Integrate g(r, u, u')·r² over the node range.
fn node_integral<G: Fn(f64, f64, f64) -> f64>(prof: &Profile, g: G) -> f64 {
    let mut total = 0.0;
    // compensated sum: thousands of intervals of very different size
    let mut comp = 0.0;
    for i in 0..prof.len() - 1 {
        let (a, b) = (prof.r[i], prof.r[i + 1]);
        let v = if b <= prof.series_end {
            gl8_interval(a, b, |r| {
                let (u, du) = prof.eval(r);
                g(r, u, du) * r * r
            })
        } else {
            gl8_interval(a, b, |r| {
                let (u, du) = prof.hermite(i, r);
                g(r, u, du) * r * r
            })
        };
        let y = v - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    total
}

/// 4π∫u^q r² dr (‖u‖_q^q over ℝ³).
pub fn lq_norm(prof: &Profile, q: f64) -> Result<f64> {
    if q < 1.0 {
        return Err(Error::InvalidInput(format!("q = {q} < 1")));
    }
    let body = node_integral(prof, |_, u, _| u.abs().powf(q));
    let rl = prof.last_r();
    let tail = match &prof.tail {
        Some(t) => tail_lq(t, q, rl)?,
        None => {
            let ul = prof.u[prof.len() - 1].abs();
            let est = ul.powf(q) * rl.powi(3);
            if est > 1e-10 * body.abs() {
                return Err(Error::TailMissing { estimate: est });
            }
            0.0
        }
    };
    Ok(FOUR_PI * (body + tail))
}

/// 4π∫(u')² r² dr from the stored derivative values.
pub fn grad_norm(prof: &Profile) -> Result<f64> {
    let body = node_integral(prof, |_, _, du| du * du);
    let rl = prof.last_r();
    let tail = match &prof.tail {
        Some(t) => tail_grad(t, rl),
        None => {
            let dl = prof.du[prof.len() - 1];
            let est = dl * dl * rl.powi(3);
            if est > 1e-10 * body {
                return Err(Error::TailMissing { estimate: est });
            }
            0.0
        }
    };
    Ok(FOUR_PI * (body + tail))
}

/// The four integrals every functional is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2sq: f64,
    pub lp1: f64,
    pub l6: f64,
    pub grad_l2sq: f64,
}

impl Norms {
    /// Norms of the profile itself. `l2sq` is infinite when the tail is
    /// algebraic (critical limit).
    pub fn of_profile(prof: &Profile, p: f64) -> Result<Norms> {
        let l2sq = match lq_norm(prof, 2.0) {
            Ok(v) => v,
            Err(Error::NonIntegrable { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let lp1 = match lq_norm(prof, p + 1.0) {
            Ok(v) => v,
            Err(Error::NonIntegrable { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        Ok(Norms { l2sq, lp1, l6: lq_norm(prof, 6.0)?, grad_l2sq: grad_norm(prof)? })
    }

    /// Norms of u(r) = M·w(M²r) from those of w: ‖u‖_q^q = M^{q−6}‖w‖_q^q.
    pub fn rescale(&self, m: f64, p: f64) -> Norms {
        Norms {
            l2sq: m.powf(-4.0) * self.l2sq,
            lp1: m.powf(p - 5.0) * self.lp1,
            l6: self.l6,
            grad_l2sq: self.grad_l2sq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub e: f64,
    pub k: f64,
    pub s_omega: f64,
    pub n_omega: f64,
    pub l2sq: f64,
    pub lp1: f64,
    pub l6: f64,
    pub grad_l2sq: f64,
}

impl FunctionalSet {
    pub fn from_norms(n: &Norms, omega: f64, p: f64) -> FunctionalSet {
        let e = 0.5 * n.grad_l2sq - n.lp1 / (p + 1.0) - n.l6 / 6.0;
        let k = n.grad_l2sq - 3.0 * (p - 1.0) / (2.0 * (p + 1.0)) * n.lp1 - n.l6;
        FunctionalSet {
            e,
            k,
            s_omega: e + 0.5 * omega * n.l2sq,
            n_omega: n.grad_l2sq + omega * n.l2sq - n.lp1 - n.l6,
            l2sq: n.l2sq,
            lp1: n.lp1,
            l6: n.l6,
            grad_l2sq: n.grad_l2sq,
        }
    }

    /// E − K/6 = grad/3 + (3p−7)/(6(p+1))·lp1 evaluated from the parts.
    pub fn e_minus_k6_rhs(&self, p: f64) -> f64 {
        self.grad_l2sq / 3.0 + (3.0 * p - 7.0) / (6.0 * (p + 1.0)) * self.lp1
    }

    /// E − 2K/(3(p−1)) = (3p−7)/(6(p−1))·grad + (5−p)/(6(p−1))·l6.
    pub fn e_minus_k_scaled_rhs(&self, p: f64) -> f64 {
        (3.0 * p - 7.0) / (6.0 * (p - 1.0)) * self.grad_l2sq + (5.0 - p) / (6.0 * (p - 1.0)) * self.l6
    }

    /// Second derivative of the mass-preserving fibre map at λ = 1.
    pub fn fiber_second_derivative(&self, p: f64) -> f64 {
        2.0 * self.grad_l2sq - 9.0 * (p - 1.0).powi(2) / (4.0 * (p + 1.0)) * self.lp1 - 6.0 * self.l6
    }
}

/// Functionals of the profile taken as the physical function.
pub fn evaluate(prof: &Profile, omega: f64) -> Result<FunctionalSet> {
    let p = prof.spec.p();
    Ok(FunctionalSet::from_norms(&Norms::of_profile(prof, p)?, omega, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub nehari: f64,
    pub pohozaev: f64,
    pub kfun: f64,
    pub mass_law: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.nehari.max(self.pohozaev).max(self.kfun).max(self.mass_law)
    }
}

/// Relative residuals of the Nehari, Pohozaev, K = 0 and mass-law identities.
/// Each identity is divided by the largest magnitude among its own terms.
pub fn identity_residuals_from(n: &Norms, omega: f64, p: f64) -> Residuals {
    let rel = |terms: &[f64]| {
        let s: f64 = terms.iter().sum();
        let m = terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        if m == 0.0 {
            0.0
        } else {
            (s / m).abs()
        }
    };
    let wl2 = omega * n.l2sq;
    let ml = (5.0 - p) / (2.0 * (p + 1.0));
    Residuals {
        nehari: rel(&[n.grad_l2sq, wl2, -n.lp1, -n.l6]),
        pohozaev: rel(&[0.5 * n.grad_l2sq, 1.5 * wl2, -3.0 / (p + 1.0) * n.lp1, -0.5 * n.l6]),
        kfun: (n.grad_l2sq - 3.0 * (p - 1.0) / (2.0 * (p + 1.0)) * n.lp1 - n.l6).abs() / n.grad_l2sq,
        mass_law: rel(&[wl2, -ml * n.lp1]),
    }
}

pub fn identity_residuals(prof: &Profile, omega: f64, p: f64) -> Result<Residuals> {
    Ok(identity_residuals_from(&Norms::of_profile(prof, p)?, omega, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_ode::{integrate_traced, IntegrateOptions, OdeSpec, ShootingOutcome};

    fn talenti_profile() -> Profile {
        let spec = OdeSpec::NormalizedDoublePower { a: 0.0, b: 0.0, p: 2.5 };
        match integrate_traced(&spec, 1.0, &IntegrateOptions::default()).unwrap().0 {
            ShootingOutcome::Decays(p) => *p,
            o => panic!("{}", o.label()),
        }
    }

    #[test]
    fn talenti_norms_match_closed_form() {
        let w = talenti_profile();
        let exact6 = 3.0 * 3f64.sqrt() * std::f64::consts::PI.powi(2) / 4.0;
        let l6 = lq_norm(&w, 6.0).unwrap();
        assert!((l6 / exact6 - 1.0).abs() < 1e-7, "{l6}");
        let g = grad_norm(&w).unwrap();
        assert!((g / exact6 - 1.0).abs() < 1e-7, "{g}");
        let f = evaluate(&w, 0.0).unwrap();
        assert!((0.5 * f.grad_l2sq - f.l6 / 6.0 - exact6 / 3.0).abs() < 1e-6);
        assert!(lq_norm(&w, 2.0).is_err());
    }

    #[test]
    fn talenti_with_frequency_fails_nehari() {
        let w = talenti_profile();
        // W ∉ L²: the ω-term is infinite, so the identity cannot close.
        let r = identity_residuals(&w, 0.1, 2.5).unwrap();
        assert!(!(r.nehari < 1e-3));
    }

    #[test]
    fn perturbed_profile_breaks_k() {
        let w = talenti_profile();
        let n = Norms::of_profile(&w, 2.5).unwrap();
        let s = 1.01f64;
        let np = Norms { l2sq: n.l2sq, lp1: n.lp1, l6: n.l6 * s.powi(6), grad_l2sq: n.grad_l2sq * s * s };
        assert!(identity_residuals_from(&np, 0.0, 2.5).kfun > 1e-3);
    }

    #[test]
    fn rescaling_law() {
        let n = Norms { l2sq: 3.0, lp1: 2.0, l6: 5.0, grad_l2sq: 7.0 };
        let m = 17.0f64;
        let r = n.rescale(m, 2.5);
        assert!((r.lp1 - m.powf(3.5 - 6.0) * 2.0).abs() < 1e-15);
        assert_eq!(r.l6, 5.0);
    }

    #[test]
    fn tail_closed_forms_match_quadrature() {
        let t = TailModel { c: 2.0, kappa: 0.7, nu: 1.0 };
        let rl = 3.0;
        let mut q = 0.0;
        let n = 400_000;
        let h = 60.0 / n as f64;
        let mut g = 0.0;
        for i in 0..n {
            let r = rl + (i as f64 + 0.5) * h;
            let (u, du) = t.eval(r);
            q += u.powf(2.5) * r * r * h;
            g += du * du * r * r * h;
        }
        assert!((tail_lq(&t, 2.5, rl).unwrap() / q - 1.0).abs() < 1e-7);
        assert!((tail_grad(&t, rl) / g - 1.0).abs() < 1e-7);
    }
}
