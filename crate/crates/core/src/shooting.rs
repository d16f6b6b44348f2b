//! Amplitude shooting: scan, bracket, bisect, complete the tail, and assemble
//! solution records.
//!
//! A one-parameter family x ↦ (equation, central value) is classified by
//! trajectory outcome; opposite outcomes bracket a decaying solution. The
//! same machinery drives the double-power amplitude M, the single-power
//! ground state and the singular half-line equation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{identity_residuals_from, FunctionalSet, Norms, Residuals};
use crate::radial_ode::{integrate_traced, propagate, IntegrateOptions, OdeSpec, Profile, ShootingOutcome, TailModel, Trace};
use crate::reference_profiles::{self, talenti_derivs};

/// Agreement required between the two bracketing trajectories before the
/// inner profile is trusted.
const AGREE_REL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FamilyRoot {
    /// Parameter of the trajectory the profile was built from.
    pub x: f64,
    /// The other end of the final bracket.
    pub x_other: f64,
    pub signs: (i8, i8),
    pub profile: Profile,
    /// Relative derivative mismatch where the inward tail meets the forward
    /// trajectory.
    pub join_residual: f64,
    pub iterations: usize,
}

fn classify<F: Fn(f64) -> (OdeSpec, f64)>(family: &F, x: f64, opts: &IntegrateOptions) -> Result<(ShootingOutcome, Trace)> {
    let (spec, c) = family(x);
    integrate_traced(&spec, c, opts)
}

/// Bisect (geometrically) a bracket of a positive parameter until the
/// relative width is below `rel`, then build the decaying profile.
pub fn bisect_family<F: Fn(f64) -> (OdeSpec, f64)>(family: F, lo: f64, hi: f64, rel: f64, opts: &IntegrateOptions) -> Result<FamilyRoot> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("bad bracket [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let (mut olo, mut tlo) = classify(&family, lo, opts)?;
    let (mut ohi, mut thi) = classify(&family, hi, opts)?;
    if let ShootingOutcome::Decays(p) = olo {
        return Ok(FamilyRoot { x: lo, x_other: hi, signs: (0, ohi.sign()), profile: *p, join_residual: 0.0, iterations: 0 });
    }
    if olo.sign() == 0 || ohi.sign() == 0 || olo.sign() == ohi.sign() {
        return Err(Error::BracketNotFound(format!(
            "ends classify as {} at {lo:e} and {} at {hi:e}",
            olo.label(),
            ohi.label()
        )));
    }
    let mut it = 0;
    while hi / lo - 1.0 > rel {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        it += 1;
        let (om, tm) = classify(&family, mid, opts)?;
        match om.sign() {
            0 => {
                if let ShootingOutcome::Decays(p) = om {
                    return Ok(FamilyRoot { x: mid, x_other: hi, signs: (0, ohi.sign()), profile: *p, join_residual: 0.0, iterations: it });
                }
                return Err(Error::BracketCollapse(format!(
                    "undecided at {mid:e} (r = {:e}) between {} at {lo:e} and {} at {hi:e}",
                    om.radius(),
                    olo.label(),
                    ohi.label()
                )));
            }
            s if s == olo.sign() => {
                lo = mid;
                olo = om;
                tlo = tm;
            }
            _ => {
                hi = mid;
                ohi = om;
                thi = tm;
            }
        }
    }
    let (spec, central) = family(lo);
    let (profile, join) = complete_tail(&spec, central, &tlo, &thi, opts.rtol)?;
    Ok(FamilyRoot { x: lo, x_other: hi, signs: (olo.sign(), ohi.sign()), profile, join_residual: join, iterations: it })
}

/// Keep the forward trajectory where the bracketing pair agrees and replace
/// the rest by the decaying solution integrated inward from far out.
pub fn complete_tail(spec: &OdeSpec, central: f64, lo: &Trace, hi: &Trace, rtol: f64) -> Result<(Profile, f64)> {
    let mk = |t: &Trace| Profile::new(spec.clone(), central, t.r.clone(), t.u.clone(), t.du.clone(), None, t.series_end, (rtol, rtol));
    let plo = mk(lo)?;
    let phi = mk(hi)?;
    let mut cut = 1;
    for i in 2..plo.len() {
        let r = plo.r[i];
        if r >= phi.last_r() || plo.u[i] <= 0.0 || plo.du[i] >= 0.0 {
            break;
        }
        let uh = phi.value(r);
        if ((plo.u[i] - uh) / plo.u[i]).abs() > AGREE_REL {
            break;
        }
        cut = i;
    }
    if cut < 2 {
        return Err(Error::BracketCollapse("bracketing trajectories disagree from the start".into()));
    }
    let kappa = spec.decay_rate();
    let nu = spec.tail_power();
    if kappa == 0.0 {
        return Err(Error::InvalidInput("tail completion needs a positive decay rate".into()));
    }
    let (rc, uc, duc) = (plo.r[cut], plo.u[cut], plo.du[cut]);
    let r_far = rc + 25.0 / kappa;
    let mut lnc = uc.ln() + nu * rc.ln() + kappa * rc;
    let mut nodes: Vec<(f64, f64, f64)> = Vec::new();
    let mut du_end = 0.0;
    let mut converged = false;
    // secant on ln(u_inward/u_forward) as a function of ln c; the response is
    // only linear when the nonlinearity is negligible at r_far
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..40 {
        let tail = TailModel { c: lnc.exp(), kappa, nu };
        let (uf, duf) = tail.eval(r_far);
        nodes.clear();
        let (ue, de) = propagate(spec, r_far, uf, duf, rc, rtol * 0.1, |r, u, du| nodes.push((r, u, du)))?;
        du_end = de;
        let ratio = ue / uc;
        if !(ratio > 0.0) {
            return Err(Error::BracketCollapse("inward tail changed sign".into()));
        }
        let f = ratio.ln();
        if f.abs() < rtol.max(1e-13) {
            converged = true;
            break;
        }
        let slope = match prev {
            Some((x0, f0)) if (f - f0).abs() > 0.0 && (lnc - x0).abs() > 0.0 => ((f - f0) / (lnc - x0)).clamp(0.1, 10.0),
            _ => 1.0,
        };
        prev = Some((lnc, f));
        lnc -= f / slope;
    }
    if !converged {
        return Err(Error::NoConvergence("tail amplitude matching".into()));
    }
    let join = ((du_end - duc) / duc).abs();
    let (mut r, mut u, mut du) = (plo.r[..=cut].to_vec(), plo.u[..=cut].to_vec(), plo.du[..=cut].to_vec());
    // inward nodes end at r_cut; keep those strictly outside it, far point last
    let tail = TailModel { c: lnc.exp(), kappa, nu };
    let (uf, duf) = tail.eval(r_far);
    let mut outer: Vec<(f64, f64, f64)> = nodes.into_iter().filter(|n| n.0 > rc * (1.0 + 1e-14)).collect();
    outer.push((r_far, uf, duf));
    outer.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    outer.dedup_by(|a, b| a.0 == b.0);
    for (x, y, z) in outer {
        r.push(x);
        u.push(y);
        du.push(z);
    }
    let prof = Profile::new(spec.clone(), central, r, u, du, Some(tail), plo.series_end, (rtol, rtol))?;
    Ok((prof, join))
}

// ---------------------------------------------------------------------------
// double-power amplitude shooting

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Small,
    Large,
    Unclassified,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Small => "small",
            Branch::Large => "large",
            Branch::Unclassified => "unclassified",
        }
    }
}

/// Equation for amplitude M at frequency ω: a = ωM⁻⁴, b = M^{p−5}.
pub fn normalized_spec(p: f64, omega: f64, m: f64) -> OdeSpec {
    OdeSpec::NormalizedDoublePower { a: omega * m.powi(-4), b: m.powf(p - 5.0), p }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub ode: IntegrateOptions,
    pub bisect_rel: f64,
    pub n_grid: usize,
    pub m_range: Option<(f64, f64)>,
    /// Search for closely spaced root pairs hidden inside one grid cell.
    pub refine: bool,
    /// Largest accepted join residual of the completed tail.
    pub join_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { ode: IntegrateOptions::default(), bisect_rel: 1e-12, n_grid: 256, m_range: None, refine: true, join_tol: 1e-6 }
    }
}

/// Amplitude window guaranteed to contain every solution the scan can see.
///
/// The lower end sits just under the necessary bound M^{p−1} > 2(p+1)ω/(5−p);
/// the upper end covers the large-branch growth law with three decades of
/// slack.
pub fn default_m_range(p: f64, omega: f64) -> (f64, f64) {
    let lo = 0.999 * (omega * 2.0 * (p + 1.0) / (5.0 - p)).powf(1.0 / (p - 1.0));
    let e = if p < 3.0 {
        (1.0 / (6.0 - 2.0 * p)).max((3.0 - p) / (2.0 * (p - 1.0)))
    } else {
        -1.0 / (p - 1.0)
    };
    let hi = 1e3 * 1f64.max(omega.powf(-e));
    (lo, hi.max(lo * 1e3))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub m: f64,
    pub class: String,
    pub sign: i8,
    /// √a·r at the classifying event (natural-unit depth).
    pub depth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeScan {
    pub p: f64,
    pub omega: f64,
    pub grid: Vec<ScanPoint>,
    pub brackets: Vec<(f64, f64)>,
    pub undecided: Vec<f64>,
    /// Extra classifications made while refining suspected root pairs.
    pub refined: Vec<ScanPoint>,
}

fn scan_point(p: f64, omega: f64, m: f64, opts: &IntegrateOptions) -> ScanPoint {
    let spec = normalized_spec(p, omega, m);
    let a = omega * m.powi(-4);
    match integrate_traced(&spec, 1.0, opts) {
        Ok((o, _)) => ScanPoint { m, class: o.label().into(), sign: o.sign(), depth: a.sqrt() * o.radius() },
        Err(e) => ScanPoint { m, class: format!("error: {e}"), sign: 0, depth: 0.0 },
    }
}

/// Classify a log-spaced amplitude grid and collect sign-change brackets.
pub fn scan_amplitudes(p: f64, omega: f64, m_range: (f64, f64), n_grid: usize, opts: &SolveOptions) -> Result<AmplitudeScan> {
    if !(p > 1.0 && p < 5.0) {
        return Err(Error::InvalidInput(format!("p = {p} outside (1, 5)")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidInput(format!("omega = {omega} must be positive")));
    }
    let (m0, m1) = m_range;
    if !(m0 > 0.0 && m1 > m0) {
        return Err(Error::InvalidInput(format!("bad amplitude range [{m0}, {m1}]")));
    }
    if n_grid < 64 {
        return Err(Error::InvalidInput("n_grid must be ≥ 64".into()));
    }
    let (l0, l1) = (m0.ln(), m1.ln());
    let ms: Vec<f64> = (0..n_grid).map(|i| (l0 + (l1 - l0) * i as f64 / (n_grid - 1) as f64).exp()).collect();
    let ode = opts.ode;
    let grid: Vec<ScanPoint> = ms.par_iter().map(|&m| scan_point(p, omega, m, &ode)).collect();
    let undecided = grid.iter().filter(|g| g.sign == 0).map(|g| g.m).collect();
    let mut brackets = Vec::new();
    for w in grid.windows(2) {
        if w[0].sign != 0 && w[1].sign != 0 && w[0].sign != w[1].sign {
            brackets.push((w[0].m, w[1].m));
        }
    }
    let mut refined = Vec::new();
    if opts.refine {
        for i in 1..grid.len() - 1 {
            let (a, b, c) = (&grid[i - 1], &grid[i], &grid[i + 1]);
            if b.sign == 0 || a.sign != b.sign || c.sign != b.sign || b.depth < a.depth || b.depth < c.depth {
                continue;
            }
            let (pts, found) = refine_cell(p, omega, a.m, c.m, b.sign, &ode);
            refined.extend(pts.iter().cloned());
            brackets.extend(found);
        }
    }
    brackets.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(AmplitudeScan { p, omega, grid, brackets, undecided, refined })
}

/// Golden-section search for the deepest trajectory inside a cell whose ends
/// share a class; any opposite class found yields brackets.
fn refine_cell(p: f64, omega: f64, m_a: f64, m_b: f64, sign: i8, ode: &IntegrateOptions) -> (Vec<ScanPoint>, Vec<(f64, f64)>) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (m_a.ln(), m_b.ln());
    let mut pts = vec![];
    let eval = |x: f64, pts: &mut Vec<ScanPoint>| -> ScanPoint {
        let sp = scan_point(p, omega, x.exp(), ode);
        pts.push(sp.clone());
        sp
    };
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = eval(x1, &mut pts);
    let mut f2 = eval(x2, &mut pts);
    for _ in 0..40 {
        if f1.sign != sign || f2.sign != sign {
            break;
        }
        if f1.depth > f2.depth {
            b = x2;
            x2 = x1;
            f2 = f1.clone();
            x1 = b - g * (b - a);
            f1 = eval(x1, &mut pts);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2.clone();
            x2 = a + g * (b - a);
            f2 = eval(x2, &mut pts);
        }
        if (b - a).abs() < 1e-10 {
            break;
        }
    }
    let mut all = pts.clone();
    all.push(ScanPoint { m: m_a, class: String::new(), sign, depth: 0.0 });
    all.push(ScanPoint { m: m_b, class: String::new(), sign, depth: 0.0 });
    all.sort_by(|x, y| x.m.partial_cmp(&y.m).unwrap());
    let mut found = vec![];
    for w in all.windows(2) {
        if w[0].sign != 0 && w[1].sign != 0 && w[0].sign != w[1].sign {
            found.push((w[0].m, w[1].m));
        }
    }
    (pts, found)
}

/// Distances of a solution to the two limit profiles on [0, 10].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitDistances {
    /// sup |ω^{−1/(p−1)}u(ρ/√ω) − U†(ρ)|
    pub to_ustar: f64,
    /// sup |w(x) − W(x)|
    pub to_talenti: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub p: f64,
    pub omega: f64,
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub branch: Branch,
    #[serde(skip)]
    pub profile: Option<Arc<Profile>>,
    /// Norms of the physical u.
    pub norms: Norms,
    /// Norms of the normalised w.
    pub norms_normalized: Norms,
    pub functionals: FunctionalSet,
    pub residuals: Residuals,
    pub join_residual: f64,
    pub bracket: (f64, f64),
    pub distances: Option<LimitDistances>,
}

impl SolutionRecord {
    pub fn profile(&self) -> &Profile {
        self.profile.as_ref().expect("record carries its profile")
    }

    /// Physical u(r) = M·w(M²r).
    pub fn u(&self, r: f64) -> f64 {
        self.m * self.profile().value(self.m * self.m * r)
    }
}

/// Bisect one amplitude bracket and assemble the record.
pub fn bisect_solution(p: f64, omega: f64, bracket: (f64, f64), opts: &SolveOptions) -> Result<SolutionRecord> {
    let root = bisect_family(|m| (normalized_spec(p, omega, m), 1.0), bracket.0, bracket.1, opts.bisect_rel, &opts.ode)?;
    if root.join_residual > opts.join_tol {
        return Err(Error::BracketCollapse(format!(
            "tail join residual {:e} at M = {:e} exceeds {:e}",
            root.join_residual, root.x, opts.join_tol
        )));
    }
    record_from_profile(p, omega, root.x, root.profile, root.join_residual, (root.x.min(root.x_other), root.x.max(root.x_other)))
}

pub fn record_from_profile(p: f64, omega: f64, m: f64, profile: Profile, join: f64, bracket: (f64, f64)) -> Result<SolutionRecord> {
    let nw = Norms::of_profile(&profile, p)?;
    let norms = nw.rescale(m, p);
    let functionals = FunctionalSet::from_norms(&norms, omega, p);
    let residuals = identity_residuals_from(&norms, omega, p);
    Ok(SolutionRecord {
        p,
        omega,
        m,
        alpha: omega * m.powi(-4),
        beta: m.powf(p - 5.0),
        branch: Branch::Unclassified,
        profile: Some(Arc::new(profile)),
        norms,
        norms_normalized: nw,
        functionals,
        residuals,
        join_residual: join,
        bracket,
        distances: None,
    })
}

/// Sup-distances to U† (ω-rescaled) and W (amplitude-normalised) on [0, 10].
pub fn limit_distances(rec: &SolutionRecord, ustar: &Profile) -> LimitDistances {
    let prof = rec.profile();
    let (p, om, m) = (rec.p, rec.omega, rec.m);
    let mut du = 0.0f64;
    let mut dw = 0.0f64;
    let n = 2000;
    let s_om = om.powf(-1.0 / (p - 1.0));
    for k in 0..=n {
        let x = 10.0 * k as f64 / n as f64;
        // ρ = √ω r ; u(r) = M w(M² r)
        let r = x / om.sqrt();
        let resc = s_om * m * prof.value(m * m * r);
        du = du.max((resc - ustar.value(x)).abs());
        dw = dw.max(prof.deviation_from(x, talenti_derivs).abs());
    }
    LimitDistances { to_ustar: du, to_talenti: dw }
}

/// Tag records at one (p, ω) by their nearest limit profile.
pub fn classify_branch(records: &mut [SolutionRecord], ustar_tol: f64) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let ustar = reference_profiles::solve_ustar_cached(records[0].p, ustar_tol)?;
    for r in records.iter_mut() {
        r.distances = Some(limit_distances(r, &ustar.profile));
    }
    let tie = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if records.len() == 2 {
        let d: Vec<LimitDistances> = records.iter().map(|r| r.distances.unwrap()).collect();
        if tie(d[0].to_ustar, d[1].to_ustar) {
            records.iter_mut().for_each(|r| r.branch = Branch::Unclassified);
        } else {
            let s = if d[0].to_ustar < d[1].to_ustar { 0 } else { 1 };
            records[s].branch = Branch::Small;
            records[1 - s].branch = Branch::Large;
        }
    } else {
        for r in records.iter_mut() {
            let d = r.distances.unwrap();
            r.branch = if tie(d.to_ustar, d.to_talenti) {
                Branch::Unclassified
            } else if d.to_ustar < d.to_talenti {
                Branch::Small
            } else {
                Branch::Large
            };
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Solutions {
    pub scan: AmplitudeScan,
    pub records: Vec<SolutionRecord>,
}

/// Scan, bisect every bracket, tag branches; records sorted by M.
pub fn find_solutions(p: f64, omega: f64, opts: &SolveOptions) -> Result<Solutions> {
    let range = opts.m_range.unwrap_or_else(|| default_m_range(p, omega));
    let scan = scan_amplitudes(p, omega, range, opts.n_grid, opts)?;
    let mut records = Vec::with_capacity(scan.brackets.len());
    for &b in &scan.brackets {
        records.push(bisect_solution(p, omega, b, opts)?);
    }
    records.sort_by(|a, b| a.m.partial_cmp(&b.m).unwrap());
    classify_branch(&mut records, 1e-10)?;
    Ok(Solutions { scan, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_range_covers_both_branches() {
        // p = 2.5, ω = 1e-4: small root ≈ 9e-3, large root ≈ 4.7e4
        let (lo, hi) = default_m_range(2.5, 1e-4);
        assert!(lo < 8e-3 && hi > 1e6);
    }

    #[test]
    fn ustar_bracket_sides() {
        let u = reference_profiles::solve_ustar_cached(3.0, 1e-10).unwrap();
        let c = u.central_value;
        let spec = OdeSpec::UStarEq { p: 3.0 };
        let o = IntegrateOptions::default();
        let above = integrate_traced(&spec, c * 1.001, &o).unwrap().0;
        let below = integrate_traced(&spec, c * 0.999, &o).unwrap().0;
        assert_eq!((above.sign(), below.sign()), (-1, 1));
    }

    #[test]
    fn moderate_frequency_has_two_solutions() {
        let sols = find_solutions(2.5, 1e-2, &SolveOptions::default()).unwrap();
        assert_eq!(sols.records.len(), 2, "{:?}", sols.scan.brackets);
        let (s, l) = (&sols.records[0], &sols.records[1]);
        assert_eq!((s.branch, l.branch), (Branch::Small, Branch::Large));
        for r in &sols.records {
            assert!(r.residuals.max() < 1e-6, "{:?}", r.residuals);
            assert!(r.profile().is_positive_decreasing());
        }
    }
}
