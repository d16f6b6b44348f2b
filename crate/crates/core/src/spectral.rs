//! Radial spectrum of L = −Δ + ω − p·u^{p−1} − 5u⁴.
//!
//! With v = r·φ the radial problem becomes −v'' + V v = λ v on (0, R) with
//! Dirichlet ends. Everything is computed in the amplitude-normalised
//! variable x = M²r, where L = M⁴(−Δ_x + α − pβw^{p−1} − 5w⁴); eigenvalues are
//! scaled back by M⁴.
//!
//! Two counters are kept independent: Sturm pivots of a finite-difference
//! pencil, and a Prüfer angle integrated on the continuous potential.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference_profiles::{talenti_derivs, talenti_value};
use crate::rk::{self, Flow, RkOptions};
use crate::shooting::SolutionRecord;

type Pot = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A half-line Schrödinger problem −v'' + V v = μ v on (0, L), v(0) = v(L) = 0.
#[derive(Clone)]
pub struct HalfLine {
    pub potential: Pot,
    pub length: f64,
    /// Length scale of the potential well; sets grid clustering.
    pub core: f64,
    /// Fit the discrete potential so that x·ΛW(x) is an exact discrete
    /// zero mode of −d² − 5W⁴ (near-bubble profiles).
    pub resonance: bool,
    /// V + 5W⁴ evaluated without cancellation; used with `resonance`.
    pub delta: Option<Pot>,
    /// Physical eigenvalue = unit·μ.
    pub unit: f64,
    /// Zero threshold in μ units.
    pub tol_zero: f64,
    /// The subcritical coupling is below what a double-precision profile
    /// resolves against W; counts may still agree but are not certified.
    pub precision_limited: bool,
}

impl std::fmt::Debug for HalfLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HalfLine")
            .field("length", &self.length)
            .field("core", &self.core)
            .field("resonance", &self.resonance)
            .field("unit", &self.unit)
            .field("tol_zero", &self.tol_zero)
            .field("precision_limited", &self.precision_limited)
            .finish()
    }
}

impl HalfLine {
    pub fn new(potential: impl Fn(f64) -> f64 + Send + Sync + 'static, length: f64, core: f64) -> Self {
        HalfLine { potential: Arc::new(potential), length, core, resonance: false, delta: None, unit: 1.0, tol_zero: 1e-6, precision_limited: false }
    }

    pub fn with_length(&self, length: f64) -> Self {
        HalfLine { length, ..self.clone() }
    }

    pub fn deepened(&self, frac: f64) -> Self {
        let v = self.potential.clone();
        HalfLine { potential: Arc::new(move |x| { let y = v(x); y - frac * y.min(0.0).abs() }), delta: None, ..self.clone() }
    }
}

/// Below this β the profile's deviation from W (stored as w = W + δ) is
/// under the rounding level of W in the core.
pub const BETA_FLOOR: f64 = 1e-18;

/// ΛW = (½ + x∂ₓ)W.
pub fn lambda_w(x: f64) -> f64 {
    let t = x * x / 3.0;
    talenti_value(x).unwrap() * (1.0 - t) / (2.0 * (1.0 + t))
}

/// Effective potential of the record's linearisation on the half line in
/// normalised units, truncated at physical radius `r_phys`.
pub fn reduce_to_halfline(rec: &SolutionRecord, r_phys: f64) -> Result<HalfLine> {
    let prof = rec.profile.clone().ok_or_else(|| Error::InvalidInput("record has no profile".into()))?;
    let (p, a, b, m) = (rec.p, rec.alpha, rec.beta, rec.m);
    let length = r_phys * m * m;
    if prof.tail.is_none() && length > prof.last_r() {
        return Err(Error::Coverage { requested: length, covered: prof.last_r() });
    }
    let sigma = a.max(b).max(1.0).sqrt();
    let resonance = a.max(b) < 1e-2;
    let pw = prof.clone();
    let pot = move |x: f64| {
        let w = pw.value(x).max(0.0);
        a - p * b * w.powf(p - 1.0) - 5.0 * w.powi(4)
    };
    let delta: Option<Pot> = if resonance {
        Some(Arc::new(move |x: f64| {
            let wr = talenti_value(x).unwrap();
            let t = prof.deviation_from(x, talenti_derivs) / wr;
            let w = (wr * (1.0 + t)).max(0.0);
            // w⁴ − W⁴ = W⁴·t(4 + 6t + 4t² + t³)
            let d4 = wr.powi(4) * t * (4.0 + t * (6.0 + t * (4.0 + t)));
            a - p * b * w.powf(p - 1.0) - 5.0 * d4
        }))
    } else {
        None
    };
    Ok(HalfLine {
        potential: Arc::new(pot),
        length,
        core: 1.0 / sigma,
        resonance,
        delta,
        unit: m.powi(4),
        tol_zero: 1e-6 * a,
        precision_limited: resonance && b < BETA_FLOOR,
    })
}

/// Physical V_eff(r) sampled at `n + 1` points of the sinh grid.
pub fn sample_potential(rec: &SolutionRecord, hl: &HalfLine, n: usize) -> (Vec<f64>, Vec<f64>) {
    let g = grid(hl, n);
    let m2 = rec.m * rec.m;
    let r = g.iter().map(|x| x / m2).collect();
    let v = g.iter().map(|&x| hl.unit * (hl.potential)(x)).collect();
    (r, v)
}

/// Nodes x_i = c·sinh(iΔ), i = 0..=n, ending at L. For the resonance fit the
/// scale c is adjusted so that √3 (the zero of ΛW) sits mid-cell.
fn grid(hl: &HalfLine, n: usize) -> Vec<f64> {
    let mut c = hl.core;
    let mut d = (hl.length / c).asinh() / n as f64;
    if hl.resonance {
        let xz = 3f64.sqrt();
        for _ in 0..20 {
            let k = ((xz / c).asinh() / d - 0.5).round().max(0.0);
            c = xz / ((k + 0.5) * d).sinh();
            d = (hl.length / c).asinh() / n as f64;
        }
    }
    let mut x: Vec<f64> = (0..=n).map(|i| c * (i as f64 * d).sinh()).collect();
    x[n] = hl.length;
    x
}

/// Generalised symmetric tridiagonal pencil A − μB on the interior nodes:
/// vᵀAv = Σ e_i (v_{i+1} − v_i)² + Σ g_j v_j², vᵀBv = Σ w_j v_j².
#[derive(Debug, Clone)]
pub struct Pencil {
    /// Edge weights, 1/h per cell (n entries); signed after the
    /// ground-state transform.
    e: Vec<f64>,
    /// Mass of interior nodes (n − 1 entries).
    w: Vec<f64>,
    /// Integrated potential of interior nodes.
    g: Vec<f64>,
    pub x: Vec<f64>,
}

impl Pencil {
    pub fn build(hl: &HalfLine, n: usize) -> Result<Pencil> {
        if n < 16 {
            return Err(Error::InvalidInput("need at least 16 cells".into()));
        }
        if !(hl.length > 0.0 && hl.core > 0.0) {
            return Err(Error::InvalidInput("half-line length and core scale must be positive".into()));
        }
        let x = grid(hl, n);
        let mut e: Vec<f64> = x.windows(2).map(|s| 1.0 / (s[1] - s[0])).collect();
        let mut w = Vec::with_capacity(n - 1);
        let mut g = Vec::with_capacity(n - 1);
        if hl.resonance {
            // v = v0·y with v0 = x·ΛW. The fitted operator (v0 an exact discrete
            // zero mode of −d² − 5W⁴) is congruent to edge weights e·v0_i·v0_{i+1}
            // plus the remainder ΔV, with no O(1/h) cancellation.
            let v0: Vec<f64> = x.iter().map(|&t| bubble_mode(t).0).collect();
            for (i, ei) in e.iter_mut().enumerate() {
                *ei *= v0[i] * v0[i + 1];
            }
            for i in 1..n {
                let wi = 0.5 * (x[i + 1] - x[i - 1]);
                let dv = match &hl.delta {
                    Some(d) => d(x[i]),
                    None => (hl.potential)(x[i]) + 5.0 * talenti_value(x[i]).unwrap().powi(4),
                };
                let s2 = v0[i] * v0[i];
                w.push(wi * s2);
                g.push(wi * dv * s2);
            }
        } else {
            for i in 1..n {
                let wi = 0.5 * (x[i + 1] - x[i - 1]);
                w.push(wi);
                g.push(wi * (hl.potential)(x[i]));
            }
        }
        if let Some(i) = g.iter().chain(&w).chain(&e).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { r: x[(i % (n - 1)) + 1] });
        }
        Ok(Pencil { e, w, g, x })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Number of eigenvalues strictly below μ (negative LDLᵀ pivots).
    pub fn count_below(&self, mu: f64) -> usize {
        let mut ratio = 1.0;
        let mut cnt = 0;
        for j in 0..self.w.len() {
            let r = self.g[j] - mu * self.w[j] + self.e[j] * ratio;
            let mut q = self.e[j + 1] + r;
            if q == 0.0 {
                q = -f64::MIN_POSITIVE;
            }
            if q < 0.0 {
                cnt += 1;
            }
            ratio = r / q;
        }
        cnt
    }

    /// Gershgorin bound for the pencil.
    fn lower_bound(&self) -> f64 {
        let m = (0..self.w.len())
            .map(|j| {
                let (l, r) = (self.e[j], self.e[j + 1]);
                (l + r + self.g[j] - l.abs() - r.abs()) / self.w[j]
            })
            .fold(f64::INFINITY, f64::min);
        m - 1e-9 * m.abs() - 1e-300
    }

    /// The k lowest eigenvalues by Sturm bisection.
    pub fn lowest(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.dim() {
            return Err(Error::InvalidInput(format!("cannot take {k} eigenvalues")));
        }
        let lo0 = self.lower_bound();
        let mut hi0 = lo0.abs().max(1.0);
        let mut tries = 0;
        while self.count_below(hi0) < k {
            hi0 *= 4.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::NoConvergence("eigenvalue upper bound".into()));
            }
        }
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..400 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * lo.abs().max(hi.abs()) {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        Ok(out)
    }

    /// v·Av via edge differences, v·Bv.
    fn quad_forms(&self, v: &[f64]) -> (f64, f64) {
        let n = v.len();
        let mut a = 0.0;
        let mut b = 0.0;
        let at = |i: isize| if i < 0 || i as usize >= n { 0.0 } else { v[i as usize] };
        for c in 0..=n {
            let d = at(c as isize) - at(c as isize - 1);
            a += self.e[c] * d * d;
        }
        for j in 0..n {
            a += self.g[j] * v[j] * v[j];
            b += self.w[j] * v[j] * v[j];
        }
        (a, b)
    }

    /// Inverse iteration for the eigenvector nearest `shift`; returns its
    /// Rayleigh quotient.
    pub fn rayleigh_near(&self, shift: f64) -> f64 {
        let n = self.dim();
        let mut x = vec![1.0; n];
        let diag: Vec<f64> = (0..n).map(|j| self.e[j] + self.e[j + 1] + self.g[j] - shift * self.w[j]).collect();
        for _ in 0..30 {
            let rhs: Vec<f64> = (0..n).map(|j| self.w[j] * x[j]).collect();
            // Thomas with off-diagonal −e[j+1] between j and j+1
            let mut cp = vec![0.0; n];
            let mut dp = vec![0.0; n];
            let mut den = diag[0];
            cp[0] = -self.e[1] / den;
            dp[0] = rhs[0] / den;
            for j in 1..n {
                den = diag[j] + self.e[j] * cp[j - 1];
                if j + 1 < n {
                    cp[j] = -self.e[j + 1] / den;
                }
                dp[j] = (rhs[j] + self.e[j] * dp[j - 1]) / den;
            }
            let mut y = vec![0.0; n];
            y[n - 1] = dp[n - 1];
            for j in (0..n - 1).rev() {
                y[j] = dp[j] - cp[j] * y[j + 1];
            }
            let nrm = y.iter().map(|t| t * t).sum::<f64>().sqrt();
            x = y.into_iter().map(|t| t / nrm).collect();
        }
        let (a, b) = self.quad_forms(&x);
        a / b
    }
}

/// Zero count of the solution at energy μ via the modified Prüfer angle
/// (k·v = ρ sinθ, v' = ρ cosθ) with scale k(x) = 1/(x + c):
/// θ' = k cos²θ + (μ − V)/k sin²θ + (k'/k) sinθ cosθ, θ(0) = 0.
///
/// The x-dependent scale keeps the angle well conditioned from the core out
/// to domains many decades longer than the well.
pub fn oscillation_count(hl: &HalfLine, mu: f64) -> Result<usize> {
    if hl.resonance {
        return resonance_zero_count(hl, mu);
    }
    let c = hl.core;
    let v = hl.potential.clone();
    let f = move |x: f64, y: &[f64; 1]| {
        let (s, co) = y[0].sin_cos();
        let k = 1.0 / (x + c);
        [k * co * co + (mu - v(x)) / k * s * s - k * s * co]
    };
    let o = RkOptions { rtol: 1e-10, atol: 1e-12, h_init: Some(1e-3 * c), h_rel: 0.25, h_rel_floor: c, max_steps: 2_000_000, ..Default::default() };
    let (_, y, _) = rk::integrate(f, 0.0, [0.0], hl.length, &o, |_, _| Flow::Continue).map_err(|e| Error::NoConvergence(format!("Prüfer angle: {e:?}")))?;
    Ok((y[0] / std::f64::consts::PI).floor().max(0.0) as usize)
}

/// x·ΛW(x) and its derivative: the zero-energy solution of −v'' − 5W⁴v = 0
/// with v(0) = 0, v'(0) = ½.
pub fn bubble_mode(x: f64) -> (f64, f64) {
    let q = 1.0 + x * x / 3.0;
    let q32 = q.powf(-1.5);
    let v = 0.5 * x * (1.0 - x * x / 3.0) * q32;
    let dv = 0.5 * (1.0 - x * x) * q32 - 0.5 * x * x * (1.0 - x * x / 3.0) * q32 / q;
    (v, dv)
}

/// Zero count at energy μ for near-bubble potentials: shoot the correction
/// z = v − x·ΛW, z'' = −5W⁴z + (ΔV − μ)(x·ΛW + z), and count sign changes
/// of v. The correction keeps its own relative accuracy, which the growing
/// mode needs when it is only a 1e-12 admixture in the core.
fn resonance_zero_count(hl: &HalfLine, mu: f64) -> Result<usize> {
    let dv = match &hl.delta {
        Some(d) => d.clone(),
        None => {
            let v = hl.potential.clone();
            Arc::new(move |x: f64| v(x) + 5.0 * talenti_value(x).unwrap().powi(4)) as Pot
        }
    };
    let f = move |x: f64, y: &[f64; 2]| {
        let w4 = talenti_value(x).unwrap().powi(4);
        let (v0, _) = bubble_mode(x);
        [y[1], -5.0 * w4 * y[0] + (dv(x) - mu) * (v0 + y[0])]
    };
    let o = RkOptions {
        rtol: 1e-11,
        atol: 1e-300,
        peak_frac: 1e-4,
        h_init: Some(1e-3 * hl.core),
        h_rel: 0.05,
        h_rel_floor: hl.core,
        max_steps: 2_000_000,
        ..Default::default()
    };
    let mut zeros = 0;
    let mut prev = 1.0f64;
    rk::integrate(f, 0.0, [0.0, 0.0], hl.length, &o, |d, y1| {
        let x = d.t1();
        let v = bubble_mode(x).0 + y1[0];
        if x < hl.length && v != 0.0 {
            if v.signum() != prev.signum() {
                zeros += 1;
            }
            prev = v;
        }
        Flow::Continue
    })
    .map_err(|e| Error::NoConvergence(format!("resonance shooting: {e:?}")))?;
    Ok(zeros)
}

/// Both counters at μ = −tol_zero; disagreement is an error.
pub fn count_negative(hl: &HalfLine, n: usize) -> Result<usize> {
    let (osc, sturm) = counters(hl, n)?;
    if osc != sturm {
        return Err(Error::CounterDisagreement { oscillation: osc, sturm });
    }
    Ok(sturm)
}

fn counters(hl: &HalfLine, n: usize) -> Result<(usize, usize)> {
    let mu = -hl.tol_zero;
    let sturm = Pencil::build(hl, n)?.count_below(mu);
    let osc = oscillation_count(hl, mu)?;
    Ok((osc, sturm))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenTable {
    pub n: usize,
    pub length: f64,
    /// μ on this grid (normalised units).
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eigenvalues {
    /// Richardson-extrapolated μ (normalised units).
    pub mu: Vec<f64>,
    /// |μ_n − μ_2n| per eigenvalue (normalised units).
    pub err: Vec<f64>,
    pub tables: Vec<EigenTable>,
}

/// k lowest eigenvalues from grids n and 2n, extrapolated (second order).
pub fn lowest_eigenvalues(hl: &HalfLine, k: usize, n: usize) -> Result<Eigenvalues> {
    if k == 0 || k > 8 {
        return Err(Error::InvalidInput(format!("k = {k} outside 1..=8")));
    }
    let a = Pencil::build(hl, n)?.lowest(k)?;
    let b = Pencil::build(hl, 2 * n)?.lowest(k)?;
    let mu = a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    let err = a.iter().zip(&b).map(|(a, b)| (a - b).abs()).collect();
    Ok(Eigenvalues {
        mu,
        err,
        tables: vec![EigenTable { n, length: hl.length, mu: a }, EigenTable { n: 2 * n, length: hl.length, mu: b }],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapStatus {
    Certified,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapCertificate {
    /// min |μ_i| (normalised units).
    pub gap: f64,
    pub gap_doubled: f64,
    pub gap_wider: f64,
    pub discretization: f64,
    pub status: GapStatus,
}

/// Non-degeneracy gap with its refinement certificate: stable within 20%
/// under grid doubling and a 50% longer domain, and well above the grid error.
pub fn nondegeneracy_gap(hl: &HalfLine, k: usize, n: usize) -> Result<(GapCertificate, Eigenvalues)> {
    let base = lowest_eigenvalues(hl, k, n)?;
    let fine = lowest_eigenvalues(hl, k, 2 * n)?;
    let wide = lowest_eigenvalues(&hl.with_length(1.5 * hl.length), k, n)?;
    let argmin = |v: &[f64]| v.iter().enumerate().min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap()).map(|(i, _)| i).unwrap();
    let i = argmin(&base.mu);
    let gap = base.mu[i].abs();
    let gap_doubled = fine.mu[argmin(&fine.mu)].abs();
    let gap_wider = wide.mu[argmin(&wide.mu)].abs();
    let discretization = base.err[i].max((base.mu[i] - fine.mu[i]).abs());
    let stable = |g: f64| (g - gap).abs() <= 0.2 * gap;
    let status = if !hl.precision_limited && gap > 10.0 * discretization && gap > hl.tol_zero && stable(gap_doubled) && stable(gap_wider) {
        GapStatus::Certified
    } else {
        GapStatus::Inconclusive
    };
    Ok((GapCertificate { gap, gap_doubled, gap_wider, discretization, status }, base))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Physical truncation radius; default 30/√ω.
    pub r: Option<f64>,
    pub n: usize,
    pub k: usize,
    /// Zero threshold as a fraction of ω (physical units).
    pub tol_zero: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { r: None, n: 4000, k: 4, tol_zero: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub neg_count: usize,
    /// Lowest eigenvalues, physical units, ascending.
    pub lambda: Vec<f64>,
    pub gap0: f64,
    pub gap_status: GapStatus,
    pub r_domain: f64,
    pub n: usize,
    /// |λ_n − λ_2n|/|λ| per eigenvalue.
    pub refinement: Vec<f64>,
    pub oscillation_count: usize,
    pub sturm_count: usize,
    /// Relative mismatch of λ₁ against the Rayleigh quotient of its vector.
    pub rayleigh_mismatch: f64,
    pub precision_limited: bool,
    pub gap: GapCertificate,
    pub tables: Vec<EigenTable>,
}

pub fn default_radius(omega: f64) -> f64 {
    30.0 / omega.sqrt()
}

/// Morse index, lowest eigenvalues and gap for one solution.
pub fn spectrum(rec: &SolutionRecord, opts: &SpectralOptions) -> Result<SpectrumSummary> {
    let r = opts.r.unwrap_or_else(|| default_radius(rec.omega));
    let mut hl = reduce_to_halfline(rec, r)?;
    hl.tol_zero = opts.tol_zero * rec.alpha;
    spectrum_of(&hl, opts.n, opts.k, r)
}

pub fn spectrum_of(hl: &HalfLine, n: usize, k: usize, r_domain: f64) -> Result<SpectrumSummary> {
    let (osc, sturm) = counters(hl, n)?;
    if osc != sturm {
        return Err(Error::CounterDisagreement { oscillation: osc, sturm });
    }
    let (gap, eig) = nondegeneracy_gap(hl, k, n)?;
    let pen = Pencil::build(hl, n)?;
    let mu1 = eig.tables[0].mu[0];
    let rq = pen.rayleigh_near(mu1 - 1e-7 * mu1.abs().max(hl.tol_zero));
    let rayleigh_mismatch = ((rq - mu1) / mu1).abs();
    let unit = hl.unit;
    Ok(SpectrumSummary {
        neg_count: sturm,
        lambda: eig.mu.iter().map(|m| unit * m).collect(),
        gap0: unit * gap.gap,
        gap_status: gap.status,
        r_domain,
        n,
        refinement: eig.err.iter().zip(&eig.mu).map(|(e, m)| e / m.abs()).collect(),
        oscillation_count: osc,
        sturm_count: sturm,
        rayleigh_mismatch,
        precision_limited: hl.precision_limited,
        gap,
        tables: eig.tables,
    })
}

/// ⟨Lu, u⟩ from the norms alone: ‖∇u‖² + ω‖u‖₂² − p‖u‖_{p+1}^{p+1} − 5‖u‖₆⁶.
pub fn quadratic_form_on_solution(rec: &SolutionRecord) -> f64 {
    let n = &rec.norms;
    n.grad_l2sq + rec.omega * n.l2sq - rec.p * n.lp1 - 5.0 * n.l6
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn free_potential_has_no_negative_modes() {
        let hl = HalfLine::new(|_| 0.3, 20.0, 1.0);
        assert_eq!(count_negative(&hl, 2000).unwrap(), 0);
    }

    #[test]
    fn square_well_matches_closed_form() {
        // −v'' on (0, π): μ_j = j²
        let hl = HalfLine::new(|_| 0.0, std::f64::consts::PI, 10.0);
        let e = lowest_eigenvalues(&hl, 3, 2000).unwrap();
        for (j, m) in e.mu.iter().enumerate() {
            let want = ((j + 1) * (j + 1)) as f64;
            assert!((m - want).abs() < 1e-8 * want, "{m} vs {want}");
        }
    }

    #[test]
    fn harmonic_well_counts_and_zero_mode() {
        // −v'' + x² v on the half line with Dirichlet at 0: μ = 3, 7, 11, …
        let hl = HalfLine::new(|x| x * x - 3.5, 12.0, 1.0);
        assert_eq!(count_negative(&hl, 3000).unwrap(), 1);
        let e = lowest_eigenvalues(&hl, 2, 3000).unwrap();
        assert!((e.mu[0] + 0.5).abs() < 1e-7 && (e.mu[1] - 3.5).abs() < 1e-7, "{:?}", e.mu);
        let zero = HalfLine::new(|x| x * x - 3.0, 12.0, 1.0);
        let (cert, _) = nondegeneracy_gap(&zero, 2, 3000).unwrap();
        assert_eq!(cert.status, GapStatus::Inconclusive, "{cert:?}");
    }

    #[test]
    fn rayleigh_quotient_matches_bisection() {
        let hl = HalfLine::new(|x| -8.0 / (1.0 + x * x), 60.0, 1.0);
        let pen = Pencil::build(&hl, 3000).unwrap();
        let mu = pen.lowest(1).unwrap()[0];
        let rq = pen.rayleigh_near(mu - 1e-7 * mu.abs());
        assert!(((rq - mu) / mu).abs() < 1e-8, "{rq} vs {mu}");
    }

    #[test]
    fn resonance_fit_keeps_bubble_mode_at_zero() {
        // pure −d² − 5W⁴: x·ΛW is a zero-energy resonance, the only bound
        // state is the ground state.
        let mut hl = HalfLine::new(|x| -5.0 * talenti_value(x).unwrap().powi(4), 1e6, 1.0);
        hl.resonance = true;
        let pen = Pencil::build(&hl, 4000).unwrap();
        let mu = pen.lowest(2).unwrap();
        assert!(mu[0] < -0.1 && mu[1] > -1e-9, "{mu:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn counters_agree_on_wells(depth in 0.5f64..30.0, width in 0.5f64..3.0) {
            let hl = HalfLine::new(move |x| 0.1 - depth * (-(x / width).powi(2)).exp(), 40.0, width);
            let (o, s) = counters(&hl, 2000).unwrap();
            prop_assert_eq!(o, s);
        }

        #[test]
        fn deeper_potential_lowers_eigenvalues(depth in 1.0f64..20.0) {
            let hl = HalfLine::new(move |x| 0.1 - depth / (1.0 + x * x), 50.0, 1.0);
            let a = Pencil::build(&hl, 1500).unwrap().lowest(2).unwrap();
            let b = Pencil::build(&hl.deepened(0.1), 1500).unwrap().lowest(2).unwrap();
            prop_assert!(b[0] < a[0] && b[1] <= a[1]);
        }

        #[test]
        fn longer_domain_never_raises_eigenvalues(depth in 1.0f64..20.0, len in 10.0f64..40.0) {
            let hl = HalfLine::new(move |x| 0.1 - depth / (1.0 + x * x), len, 1.0);
            let a = lowest_eigenvalues(&hl, 2, 1500).unwrap();
            let b = lowest_eigenvalues(&hl.with_length(1.5 * len), 2, 1500).unwrap();
            for j in 0..2 {
                prop_assert!(b.mu[j] <= a.mu[j] + 1e-6 * a.mu[j].abs().max(1.0));
            }
        }
    }
}
