//! Radial profile ODEs: regular-centre series start, adaptive 5(4)
//! integration with dense output, and trajectory classification.
//!
//! All radial equations are written in coefficient form
//!
//!   −u'' − (2/r)u' + a·u − b·u^p − c·u^5 = 0,
//!
//! and integrated after rescaling to unit central value and a natural length
//! unit s = σr with σ² = max(a, b·u₀^{p−1}, c·u₀⁴). When the quintic term
//! dominates and the other two are small, the deviation δ = v − W from the
//! Talenti profile is integrated instead of v itself: the information that
//! separates crossing from rebounding trajectories sits many orders below
//! O(1) and would otherwise be lost to rounding.

mod profile;

use serde::{Deserialize, Serialize};

pub use profile::{fmt17, Profile, ProfileHeader, TailModel};

use crate::error::{Error, Result};
use crate::rk::{self, Dense, Flow, RkError, RkOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OdeSpec {
    /// −w'' − (2/r)w' + a·w − b·w^p − w^5 = 0 (amplitude-normalised form).
    NormalizedDoublePower { a: f64, b: f64, p: f64 },
    /// −û'' − (2/r)û' + a·û − û^p − m^{5−p}·û^5 = 0 (small-branch scaling).
    SmallBranchLimit { a: f64, p: f64, m: f64 },
    /// −u'' − (2/r)u' + u − u^p = 0.
    UStarEq { p: f64 },
    /// v'' − v + s^{1−p}·v^p = 0 on the half line.
    SingularVEq { p: f64 },
}

impl OdeSpec {
    pub fn p(&self) -> f64 {
        match *self {
            OdeSpec::NormalizedDoublePower { p, .. }
            | OdeSpec::SmallBranchLimit { p, .. }
            | OdeSpec::UStarEq { p }
            | OdeSpec::SingularVEq { p } => p,
        }
    }

    /// (a, b, c) of the coefficient form; `None` for the half-line equation.
    pub fn coeffs(&self) -> Option<(f64, f64, f64)> {
        match *self {
            OdeSpec::NormalizedDoublePower { a, b, .. } => Some((a, b, 1.0)),
            OdeSpec::SmallBranchLimit { a, p, m } => Some((a, 1.0, m.powf(5.0 - p))),
            OdeSpec::UStarEq { .. } => Some((1.0, 1.0, 0.0)),
            OdeSpec::SingularVEq { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("exponent p = {p} must exceed 1")));
        }
        if let OdeSpec::SingularVEq { p } = *self {
            if p >= 2.0 {
                return Err(Error::InvalidInput("singular equation needs 1 < p < 2".into()));
            }
        }
        if let Some((a, b, c)) = self.coeffs() {
            for (name, v) in [("a", a), ("b", b), ("c", c)] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidInput(format!("coefficient {name} = {v} must be finite and ≥ 0")));
                }
            }
        }
        Ok(())
    }

    /// Exponential decay rate of the tail (in r units).
    pub fn decay_rate(&self) -> f64 {
        match self.coeffs() {
            Some((a, _, _)) => a.sqrt(),
            None => 1.0,
        }
    }

    /// Power of 1/r in the tail model.
    pub fn tail_power(&self) -> f64 {
        if self.coeffs().is_some() {
            1.0
        } else {
            0.0
        }
    }

    /// u'' from the equation.
    pub fn second_derivative(&self, central: f64, r: f64, u: f64, du: f64) -> f64 {
        let p = self.p();
        match self.coeffs() {
            Some((a, b, c)) => {
                let f = a * u - b * spow(u, p) - c * u.powi(5);
                if r == 0.0 {
                    let _ = central;
                    f / 3.0
                } else {
                    f - 2.0 * du / r
                }
            }
            None => {
                if r == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    u - r.powf(1.0 - p) * spow(u, p)
                }
            }
        }
    }

    /// Start series (value, derivative) at small r for central value u₀.
    pub fn series(&self, u0: f64, r: f64) -> (f64, f64) {
        let p = self.p();
        match self.coeffs() {
            Some((a, b, c)) => {
                let f = a * u0 - b * u0.powf(p) - c * u0.powi(5);
                let fp = a - p * b * u0.powf(p - 1.0) - 5.0 * c * u0.powi(4);
                let c2 = f / 6.0;
                let c4 = fp * c2 / 20.0;
                let r2 = r * r;
                (u0 + c2 * r2 + c4 * r2 * r2, 2.0 * c2 * r + 4.0 * c4 * r2 * r)
            }
            None => {
                let v0 = u0;
                let aa = -v0.powf(p) / ((3.0 - p) * (2.0 - p));
                let cc = -p * v0.powf(p - 1.0) * aa / ((6.0 - 2.0 * p) * (5.0 - 2.0 * p));
                let dd = (aa - 0.5 * p * v0.powf(p)) / ((5.0 - p) * (4.0 - p));
                if r == 0.0 {
                    return (v0, 0.0);
                }
                let v = v0 + 0.5 * v0 * r * r + v0 * r.powi(4) / 24.0 + aa * r.powf(3.0 - p) + cc * r.powf(6.0 - 2.0 * p) + dd * r.powf(5.0 - p);
                let dv = v0 * r
                    + v0 * r.powi(3) / 6.0
                    + aa * (3.0 - p) * r.powf(2.0 - p)
                    + cc * (6.0 - 2.0 * p) * r.powf(5.0 - 2.0 * p)
                    + dd * (5.0 - p) * r.powf(4.0 - p);
                (v, dv)
            }
        }
    }
}

/// Odd extension of x^p (keeps the right-hand side finite after a crossing).
#[inline]
pub fn spow(x: f64, p: f64) -> f64 {
    if x >= 0.0 {
        x.powf(p)
    } else {
        -(-x).powf(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Start radius in natural length units; `None` picks 1e-6 (radial) or
    /// 1e-4 (half-line singular equation).
    pub r0: Option<f64>,
    /// Cut-off radius in r units; `None` picks max(50, 30/√A) in natural units.
    pub r_max: Option<f64>,
    /// Rebounds below this level are undecided. Relative to the trajectory
    /// level where the exponential regime begins (√A·s = 1), capped at 1.
    pub rebound_threshold: f64,
    /// Tail match only below this level (same reference as above).
    pub decay_threshold: f64,
    /// Minimum √A·s before an exponential tail match is accepted.
    pub decay_depth: f64,
    pub match_eps: f64,
    /// Algebraic (a = 0) matching: minimum s and tolerance on r·u'/u + 1.
    pub alg_r_min: f64,
    pub alg_slack: f64,
    pub perturbative: bool,
    pub pert_threshold: f64,
    pub switch_frac: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-11,
            atol: 1e-300,
            r0: None,
            r_max: None,
            rebound_threshold: 1e-10,
            decay_threshold: 1e-8,
            decay_depth: 8.0,
            match_eps: 1e-3,
            alg_r_min: 1e3,
            alg_slack: 1e-4,
            perturbative: true,
            pert_threshold: 0.1,
            switch_frac: 1e-2,
            max_steps: 400_000,
        }
    }
}

impl IntegrateOptions {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    fn validate(&self) -> Result<()> {
        for (n, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(Error::InvalidInput(format!("{n} = {v} outside (0, 1e-3]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum ShootingOutcome {
    Crosses(f64),
    Rebounds(f64),
    Decays(Box<Profile>),
    Undecided(f64),
}

impl ShootingOutcome {
    /// −1 crossing, +1 rebound, 0 otherwise.
    pub fn sign(&self) -> i8 {
        match self {
            ShootingOutcome::Crosses(_) => -1,
            ShootingOutcome::Rebounds(_) => 1,
            _ => 0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ShootingOutcome::Crosses(_) => "crosses",
            ShootingOutcome::Rebounds(_) => "rebounds",
            ShootingOutcome::Decays(_) => "decays",
            ShootingOutcome::Undecided(_) => "undecided",
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            ShootingOutcome::Crosses(r) | ShootingOutcome::Rebounds(r) | ShootingOutcome::Undecided(r) => *r,
            ShootingOutcome::Decays(p) => p.last_r(),
        }
    }
}

/// Accepted integration nodes in r units (r = 0 first).
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// Relative mismatch between the series at r₀ and an integration from r₀/2.
    pub start_check: f64,
    /// Natural-unit scale σ (s = σ·r).
    pub sigma: f64,
    pub series_end: f64,
    /// Radius where the perturbative formulation handed over, if used.
    pub switch_r: Option<f64>,
    pub steps: usize,
}

/// Tail test for u ~ c·e^{−√a·r}/r (or √3/r-type algebraic decay when a = 0).
pub fn decay_match(r: f64, u: f64, du: f64, a: f64, opts: &IntegrateOptions) -> bool {
    decay_match_nu(r, u, du, a, 1.0, opts)
}

fn decay_match_nu(r: f64, u: f64, du: f64, a: f64, nu: f64, opts: &IntegrateOptions) -> bool {
    decay_match_scaled(r, u, du, a, nu, 1.0, opts)
}

fn decay_match_scaled(r: f64, u: f64, du: f64, a: f64, nu: f64, level: f64, opts: &IntegrateOptions) -> bool {
    if !(u > 0.0) || du >= 0.0 || r <= 0.0 {
        return false;
    }
    if a == 0.0 {
        return r >= opts.alg_r_min && (r * du / u + nu).abs() < opts.alg_slack;
    }
    if u >= opts.decay_threshold * level {
        return false;
    }
    let k = a.sqrt();
    let ld = du / u;
    let lo = -k - nu / r - opts.match_eps * k;
    let hi = -k * (1.0 - opts.match_eps) - nu / r;
    ld >= lo && ld <= hi
}

#[derive(Clone, Copy)]
enum Model {
    /// v'' = −(2/s)v' + A v − B v^p − C v^5
    Direct { a: f64, b: f64, c: f64, p: f64 },
    /// δ = v − W with C = 1
    Pert { a: f64, b: f64, p: f64 },
    /// v'' = v − s^{1−p} v^p
    Singular { p: f64 },
}

#[inline]
fn talenti(s: f64) -> (f64, f64) {
    let t = 1.0 + s * s / 3.0;
    let w = 1.0 / t.sqrt();
    (w, -(s / 3.0) * w / t)
}

impl Model {
    fn rhs(&self, s: f64, y: &[f64; 2]) -> [f64; 2] {
        match *self {
            Model::Direct { a, b, c, p } => {
                let v = y[0];
                [y[1], -2.0 * y[1] / s + a * v - b * spow(v, p) - c * v.powi(5)]
            }
            Model::Pert { a, b, p } => {
                let (w, _) = talenti(s);
                let d = y[0];
                let x = d / w;
                let w5 = w.powi(5);
                let dq = w5 * x * (5.0 + x * (10.0 + x * (10.0 + x * (5.0 + x))));
                let v = w + d;
                [y[1], -2.0 * y[1] / s + a * v - b * spow(v, p) - dq]
            }
            Model::Singular { p } => [y[1], y[0] - s.powf(1.0 - p) * spow(y[0], p)],
        }
    }

    /// Map the integration state to (v, v').
    fn physical(&self, s: f64, y: &[f64; 2]) -> (f64, f64) {
        match self {
            Model::Pert { .. } => {
                let (w, dw) = talenti(s);
                (w + y[0], dw + y[1])
            }
            _ => (y[0], y[1]),
        }
    }
}

enum SegEnd {
    Cross(f64),
    Rebound(f64),
    Decay,
    Undecided(f64),
    Switch,
    Done,
}

struct Driver<'a> {
    opts: &'a IntegrateOptions,
    a_scaled: f64,
    nu: f64,
    s_max: f64,
    nodes: Vec<(f64, f64, f64)>,
    steps: usize,
    /// Trajectory level where the exponential regime starts (√A·s = 1);
    /// rebound and decay thresholds are relative to it.
    level: Option<f64>,
}

impl<'a> Driver<'a> {
    fn segment(&mut self, model: Model, s0: f64, y0: [f64; 2], s_end: f64) -> Result<(SegEnd, f64, [f64; 2])> {
        let pert = matches!(model, Model::Pert { .. });
        let rk_opts = RkOptions {
            rtol: self.opts.rtol,
            atol: if pert { 1e-300 } else { self.opts.atol },
            peak_frac: if pert { 1e-4 } else { 0.0 },
            h_init: None,
            h_max: f64::INFINITY,
            h_rel: 0.05,
            h_rel_floor: 1.0,
            max_steps: self.opts.max_steps.saturating_sub(self.steps),
        };
        let mut end = SegEnd::Done;
        let opts = self.opts;
        let (a_scaled, nu, s_max) = (self.a_scaled, self.nu, self.s_max);
        let nodes = &mut self.nodes;
        let level = &mut self.level;
        let res = rk::integrate(|s, y| model.rhs(s, y), s0, y0, s_end, &rk_opts, |d: &Dense<f64, 2>, y1| {
            let s1 = d.t1();
            let (v, dv) = model.physical(s1, y1);
            if v <= 0.0 {
                let sc = bisect_phys(d, &model, 0);
                end = SegEnd::Cross(sc);
                return Flow::Stop;
            }
            if dv >= 0.0 {
                let sr = bisect_phys(d, &model, 1);
                let lv = level.unwrap_or(1.0);
                end = if v > opts.rebound_threshold * lv { SegEnd::Rebound(sr) } else { SegEnd::Undecided(sr) };
                return Flow::Stop;
            }
            nodes.push((s1, v, dv));
            if level.is_none() && a_scaled > 0.0 && a_scaled.sqrt() * s1 >= 1.0 {
                *level = Some(v.min(1.0));
            }
            let decayed = if a_scaled > 0.0 {
                a_scaled.sqrt() * s1 >= opts.decay_depth && decay_match_scaled(s1, v, dv, a_scaled, nu, level.unwrap_or(1.0), opts)
            } else {
                decay_match_nu(s1, v, dv, 0.0, nu, opts)
            };
            if decayed {
                end = SegEnd::Decay;
                return Flow::Stop;
            }
            if s1 >= s_max {
                end = SegEnd::Undecided(s1);
                return Flow::Stop;
            }
            if pert && y1[0].abs() > opts.switch_frac * talenti(s1).0 {
                end = SegEnd::Switch;
                return Flow::Stop;
            }
            Flow::Continue
        });
        match res {
            Ok((s, y, st)) => {
                self.steps += st.accepted + st.rejected;
                Ok((end, s, y))
            }
            Err(RkError::StepUnderflow(s)) => Err(Error::StepUnderflow { r: s }),
            Err(RkError::NonFinite(s)) => Err(Error::NonFinite { r: s }),
            Err(RkError::TooManySteps(s)) => Err(Error::TooManySteps { r: s }),
        }
    }
}

/// Bisect the sign change of the physical value (k = 0) or derivative (k = 1)
/// inside an accepted step.
fn bisect_phys(d: &Dense<f64, 2>, model: &Model, k: usize) -> f64 {
    let g = |s: f64| {
        let y = d.eval(s);
        let (v, dv) = model.physical(s, &y);
        if k == 0 {
            v
        } else {
            dv
        }
    };
    let (mut a, mut b) = (d.t0, d.t1());
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if (g(m) > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

/// Integrate and classify; see [`integrate_traced`].
pub fn integrate(spec: &OdeSpec, central: f64, r_max: f64, opts: &IntegrateOptions) -> Result<ShootingOutcome> {
    let mut o = *opts;
    o.r_max = Some(r_max);
    Ok(integrate_traced(spec, central, &o)?.0)
}

/// Integrate from the centre, classify the trajectory, and keep every
/// accepted node.
pub fn integrate_traced(spec: &OdeSpec, central: f64, opts: &IntegrateOptions) -> Result<(ShootingOutcome, Trace)> {
    spec.validate()?;
    opts.validate()?;
    if !(central > 0.0 && central.is_finite()) {
        return Err(Error::InvalidInput(format!("central value {central} must be positive")));
    }
    let p = spec.p();
    let (model, sigma, scale, nu) = match spec.coeffs() {
        Some((a, b, c)) => {
            let (at, bt, ct) = (a, b * central.powf(p - 1.0), c * central.powi(4));
            let mut s2 = at.max(bt).max(ct);
            if s2 <= 0.0 {
                s2 = 1.0;
            }
            let (aa, bb, cc) = (at / s2, bt / s2, ct / s2);
            let m = if opts.perturbative && cc == 1.0 && aa + bb < opts.pert_threshold {
                Model::Pert { a: aa, b: bb, p }
            } else {
                Model::Direct { a: aa, b: bb, c: cc, p }
            };
            (m, s2.sqrt(), central, 1.0)
        }
        None => (Model::Singular { p }, 1.0, 1.0, 0.0),
    };
    let a_scaled = match model {
        Model::Direct { a, .. } | Model::Pert { a, .. } => a,
        Model::Singular { .. } => 1.0,
    };
    let s0 = opts.r0.unwrap_or(if nu == 0.0 { 1e-4 } else { 1e-6 });
    let s_max = match opts.r_max {
        Some(r) => r * sigma,
        None if a_scaled > 0.0 => 50f64.max(30.0 / a_scaled.sqrt()),
        None => 10.0 * opts.alg_r_min,
    };

    // series in natural units (central 1 for radial kinds, raw for singular)
    let unit = match spec {
        OdeSpec::SingularVEq { .. } => central,
        _ => 1.0,
    };
    let series = |s: f64| -> (f64, f64) {
        match model {
            Model::Singular { .. } => spec.series(central, s),
            Model::Direct { a, b, c, p } => series_coeff(a, b, c, p, s),
            Model::Pert { a, b, p } => series_coeff(a, b, 1.0, p, s),
        }
    };
    let (v0, dv0) = series(s0);

    // Richardson check of the start: integrate s0/2 → s0 and compare.
    let start_check = {
        let (vh, dvh) = series(0.5 * s0);
        let direct = match model {
            Model::Pert { a, b, p } => Model::Direct { a, b, c: 1.0, p },
            m => m,
        };
        let o = RkOptions { rtol: opts.rtol, atol: 1e-300, ..Default::default() };
        let (_, y, _) = rk::integrate(|s, y| direct.rhs(s, y), 0.5 * s0, [vh, dvh], s0, &o, |_, _| Flow::Continue)
            .map_err(|_| Error::SeriesStart { r: s0, residual: f64::NAN })?;
        ((y[0] - v0) / v0).abs().max(((y[1] - dv0) / dv0).abs())
    };

    let mut drv = Driver { opts, a_scaled, nu, s_max, nodes: Vec::with_capacity(512), steps: 0, level: None };
    let mut switch_s = None;
    let y_init = match model {
        Model::Pert { a, b, p } => {
            // δ series: (A−B)s²/6 + [(A−pB)(A−B−1) − 5(A−B)]s⁴/120
            let d2 = (a - b) / 6.0;
            let d4 = ((a - p * b) * (a - b - 1.0) - 5.0 * (a - b)) / 120.0;
            [d2 * s0 * s0 + d4 * s0.powi(4), 2.0 * d2 * s0 + 4.0 * d4 * s0.powi(3)]
        }
        _ => [v0, dv0],
    };
    let (mut end, mut s, mut y) = drv.segment(model, s0, y_init, f64::INFINITY)?;
    if let SegEnd::Switch = end {
        let (v, dv) = model.physical(s, &y);
        switch_s = Some(s);
        let direct = match model {
            Model::Pert { a, b, p } => Model::Direct { a, b, c: 1.0, p },
            m => m,
        };
        let r = drv.segment(direct, s, [v, dv], f64::INFINITY)?;
        end = r.0;
        s = r.1;
        y = r.2;
    }
    let _ = y;

    let to_r = |s: f64| s / sigma;
    let mut tr = Trace {
        r: Vec::with_capacity(drv.nodes.len() + 2),
        u: Vec::with_capacity(drv.nodes.len() + 2),
        du: Vec::with_capacity(drv.nodes.len() + 2),
        start_check,
        sigma,
        series_end: to_r(s0),
        switch_r: switch_s.map(to_r),
        steps: drv.steps,
    };
    tr.r.push(0.0);
    tr.u.push(scale * unit);
    tr.du.push(0.0);
    tr.r.push(to_r(s0));
    tr.u.push(scale * v0);
    tr.du.push(scale * sigma * dv0);
    for &(s, v, dv) in &drv.nodes {
        tr.r.push(to_r(s));
        tr.u.push(scale * v);
        tr.du.push(scale * sigma * dv);
    }

    let out = match end {
        SegEnd::Cross(s) => ShootingOutcome::Crosses(to_r(s)),
        SegEnd::Rebound(s) => ShootingOutcome::Rebounds(to_r(s)),
        SegEnd::Undecided(s) => ShootingOutcome::Undecided(to_r(s)),
        SegEnd::Done | SegEnd::Switch => ShootingOutcome::Undecided(to_r(s)),
        SegEnd::Decay => {
            let n = tr.r.len() - 1;
            let (rl, ul) = (tr.r[n], tr.u[n]);
            let kappa = spec.decay_rate();
            let tail = TailModel { c: ul * rl.powf(nu) * (kappa * rl).exp(), kappa, nu };
            let prof = Profile::new(
                spec.clone(),
                central,
                tr.r.clone(),
                tr.u.clone(),
                tr.du.clone(),
                Some(tail),
                tr.series_end,
                (opts.rtol, opts.atol),
            )?;
            ShootingOutcome::Decays(Box::new(prof))
        }
    };
    Ok((out, tr))
}

/// Series for v(0) = 1 in coefficient form (natural units).
fn series_coeff(a: f64, b: f64, c: f64, p: f64, s: f64) -> (f64, f64) {
    let f = a - b - c;
    let fp = a - p * b - 5.0 * c;
    let c2 = f / 6.0;
    let c4 = fp * c2 / 20.0;
    let s2 = s * s;
    (1.0 + c2 * s2 + c4 * s2 * s2, 2.0 * c2 * s + 4.0 * c4 * s2 * s)
}

/// Continue a trajectory in either direction from a given state without
/// classification (used to complete tails inward from far out).
pub fn propagate(spec: &OdeSpec, r0: f64, u0: f64, du0: f64, r1: f64, rtol: f64, mut keep: impl FnMut(f64, f64, f64)) -> Result<(f64, f64)> {
    let p = spec.p();
    let model = match spec.coeffs() {
        Some((a, b, c)) => Model::Direct { a, b, c, p },
        None => Model::Singular { p },
    };
    let o = RkOptions { rtol, atol: 1e-300, ..Default::default() };
    let res = rk::integrate(|s, y| model.rhs(s, y), r0, [u0, du0], r1, &o, |d: &Dense<f64, 2>, y| {
        keep(d.t1(), y[0], y[1]);
        Flow::Continue
    });
    match res {
        Ok((_, y, _)) => Ok((y[0], y[1])),
        Err(RkError::StepUnderflow(s)) => Err(Error::StepUnderflow { r: s }),
        Err(RkError::NonFinite(s)) => Err(Error::NonFinite { r: s }),
        Err(RkError::TooManySteps(s)) => Err(Error::TooManySteps { r: s }),
    }
}

#[cfg(test)]
mod tests;
