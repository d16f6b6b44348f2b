//! Run configuration, fixed-schema CSV/JSON output, manifests, and the
//! command bodies behind the CLI.
//!
//! Everything written here is a pure function of the configuration: no
//! timestamps, ordered maps only, floats in 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::branch_asymptotics::{
    check_barriers, default_omega_list, detect_fold, energy_bound, mass_slope, sweep, verify_all, AsymptoticsReport, BarrierReport,
    BranchCurve, EnergyCheck, FoldReport, MassSlope, Sweep, SweepFailure, Verdict,
};
use crate::error::{Error, Result};
use crate::radial_ode::{fmt17, IntegrateOptions};
use crate::reference_profiles::{self, talenti_lq_norm, talenti_lq_norm_quadrature_tol, USTAR_TOL};
use crate::shooting::{find_solutions, Branch, SolutionRecord, SolveOptions};
use crate::spectral::{spectrum, GapStatus, SpectralOptions, SpectrumSummary};

pub const TOOL: &str = "dpnls";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever a column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

pub const SOLUTION_COLUMNS: [&str; 21] = [
    "p",
    "omega",
    "branch",
    "M",
    "alpha",
    "beta",
    "l2sq",
    "lp1",
    "l6",
    "grad_l2sq",
    "E",
    "K",
    "S_omega",
    "N_omega",
    "res_nehari",
    "res_pohozaev",
    "res_k",
    "morse_index",
    "lambda1",
    "lambda2",
    "gap0",
];

pub const CURVE_COLUMNS: [&str; 17] = [
    "p",
    "branch",
    "omega",
    "M",
    "alpha",
    "beta",
    "mass",
    "beta_over_sqrt_alpha",
    "beta_log_over_sqrt_alpha",
    "beta_over_alpha_pow",
    "m_Mp1",
    "omega_over_M2p6",
    "omega_over_mass_pow",
    "omega_M2_over_log2",
    "omega_pow_M_pow",
    "slope_mass",
    "res_max",
];

/// Identity residual above which a solution counts as a verification failure.
pub const RESIDUAL_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode_rel: f64,
    pub ode_abs: f64,
    pub bisect_rel: f64,
    /// Reference-profile quadrature (talenti command).
    pub quad_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = IntegrateOptions::default();
        Tolerances { ode_rel: o.rtol, ode_abs: o.atol, bisect_rel: SolveOptions::default().bisect_rel, quad_rel: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    /// Physical truncation radius; None picks 30/√ω.
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub n: usize,
    pub k: usize,
    /// Zero threshold as a fraction of ω.
    pub tol_zero: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        let s = SpectralOptions::default();
        SpectralConfig { r: s.r, n: s.n, k: s.k, tol_zero: s.tol_zero }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            o => Err(Error::InvalidInput(format!("unknown format {o:?} (csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub omega: Option<f64>,
    pub omega_list: Option<Vec<f64>>,
    #[serde(rename = "M_range")]
    pub m_range: Option<(f64, f64)>,
    pub n_grid: usize,
    pub tolerances: Tolerances,
    pub spectral: SpectralConfig,
    /// Fold search window in ω.
    pub fold_window: (f64, f64),
    pub output: OutputConfig,
    /// Worker threads; results do not depend on it.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 2.5,
            omega: None,
            omega_list: None,
            m_range: None,
            n_grid: SolveOptions::default().n_grid,
            tolerances: Tolerances::default(),
            spectral: SpectralConfig::default(),
            fold_window: (1e-2, 1e3),
            output: OutputConfig::default(),
            jobs: None,
        }
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidInput(msg)
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p < 5.0) {
            return Err(bad(format!("p = {} outside (1, 5)", self.p)));
        }
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if let Some(w) = self.omega {
            if !pos(w) {
                return Err(bad(format!("omega = {w} must be positive")));
            }
        }
        if let Some(l) = &self.omega_list {
            if l.is_empty() || !l.iter().all(|&w| pos(w)) {
                return Err(bad("omega list must be non-empty and positive".into()));
            }
        }
        if let Some((a, b)) = self.m_range {
            if !(pos(a) && pos(b) && a < b) {
                return Err(bad(format!("M range [{a}, {b}] must be positive and ordered")));
            }
        }
        let (fa, fb) = self.fold_window;
        if !(pos(fa) && pos(fb) && fa < fb) {
            return Err(bad(format!("fold window [{fa}, {fb}] must be positive and ordered")));
        }
        let t = &self.tolerances;
        for (name, v) in [("ode_rel", t.ode_rel), ("ode_abs", t.ode_abs), ("bisect_rel", t.bisect_rel), ("quad_rel", t.quad_rel)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(bad(format!("tolerance {name} = {v} outside (0, 1e-2]")));
            }
        }
        if !(self.spectral.tol_zero > 0.0 && self.spectral.tol_zero <= 1e-2) {
            return Err(bad(format!("spectral tol_zero = {} outside (0, 1e-2]", self.spectral.tol_zero)));
        }
        if self.n_grid < 64 {
            return Err(bad("n_grid must be ≥ 64".into()));
        }
        if self.spectral.n < 200 {
            return Err(bad("spectral n must be ≥ 200".into()));
        }
        if !(1..=8).contains(&self.spectral.k) {
            return Err(bad("spectral k must lie in 1..=8".into()));
        }
        if let Some(r) = self.spectral.r {
            if !pos(r) {
                return Err(bad(format!("spectral R = {r} must be positive")));
            }
        }
        if self.output.formats.is_empty() {
            return Err(bad("at least one output format is required".into()));
        }
        if self.jobs == Some(0) {
            return Err(bad("jobs must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        let mut o = SolveOptions::default();
        o.ode.rtol = self.tolerances.ode_rel;
        o.ode.atol = self.tolerances.ode_abs;
        o.bisect_rel = self.tolerances.bisect_rel;
        o.n_grid = self.n_grid;
        o.m_range = self.m_range;
        o
    }

    pub fn spectral_options(&self) -> SpectralOptions {
        SpectralOptions { r: self.spectral.r, n: self.spectral.n, k: self.spectral.k, tol_zero: self.spectral.tol_zero }
    }

    /// SHA-256 of the numerical configuration; the output directory and the
    /// worker count do not change results and are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        c.jobs = None;
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    fn omegas_for_sweep(&self) -> Result<Vec<f64>> {
        let list = match &self.omega_list {
            Some(l) => l.clone(),
            None if self.p < 2.0 => default_omega_list(1e-1, 1e-6),
            None => default_omega_list(1e-2, 1e-6),
        };
        if list.len() < 4 {
            return Err(bad("a sweep needs at least 4 frequencies".into()));
        }
        if list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("omega list must be strictly decreasing".into()));
        }
        Ok(list)
    }
}

// ---------------------------------------------------------------------------
// exit status

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExitStatus {
    Success = 0,
    VerificationFailure = 1,
    Undecided = 2,
    ConfigError = 3,
}

impl ExitStatus {
    pub fn code(&self) -> i32 {
        *self as i32
    }

    /// Verification failures outrank undecided outcomes.
    fn worst(self, other: ExitStatus) -> ExitStatus {
        let rank = |s: ExitStatus| match s {
            ExitStatus::Success => 0,
            ExitStatus::Undecided => 1,
            ExitStatus::VerificationFailure => 2,
            ExitStatus::ConfigError => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

pub fn error_status(e: &Error) -> ExitStatus {
    match e {
        Error::InvalidInput(_) | Error::Json(_) => ExitStatus::ConfigError,
        Error::BracketCollapse(_)
        | Error::BracketNotFound(_)
        | Error::Undecided(_)
        | Error::CounterDisagreement { .. }
        | Error::NoFold(_)
        | Error::NonMonotone(_) => ExitStatus::Undecided,
        _ => ExitStatus::VerificationFailure,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: ExitStatus,
    /// Human-readable summary for stdout.
    pub summary: String,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

// ---------------------------------------------------------------------------
// formatting

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// One row of solutions.csv.
pub fn solution_row(rec: &SolutionRecord, spec: Option<&SpectrumSummary>) -> Vec<String> {
    let n = &rec.norms;
    let f = &rec.functionals;
    let r = &rec.residuals;
    vec![
        fmt17(rec.p),
        fmt17(rec.omega),
        rec.branch.as_str().to_string(),
        fmt17(rec.m),
        fmt17(rec.alpha),
        fmt17(rec.beta),
        fmt17(n.l2sq),
        fmt17(n.lp1),
        fmt17(n.l6),
        fmt17(n.grad_l2sq),
        fmt17(f.e),
        fmt17(f.k),
        fmt17(f.s_omega),
        fmt17(f.n_omega),
        fmt17(r.nehari),
        fmt17(r.pohozaev),
        fmt17(r.kfun),
        spec.map(|s| s.neg_count.to_string()).unwrap_or_default(),
        opt17(spec.and_then(|s| s.lambda.first().copied())),
        opt17(spec.and_then(|s| s.lambda.get(1).copied())),
        opt17(spec.map(|s| s.gap0)),
    ]
}

pub fn solutions_csv(rows: &[(&SolutionRecord, Option<&SpectrumSummary>)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SOLUTION_COLUMNS)?;
    for (rec, s) in rows {
        w.write_record(solution_row(rec, *s))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn curve_csv(curve: &BranchCurve) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_COLUMNS)?;
    for (rec, x) in curve.points.iter().zip(&curve.ratios) {
        w.write_record([
            fmt17(curve.p),
            curve.branch.as_str().to_string(),
            fmt17(x.omega),
            fmt17(x.m),
            fmt17(rec.alpha),
            fmt17(rec.beta),
            fmt17(x.mass),
            fmt17(x.beta_over_sqrt_alpha),
            fmt17(x.beta_log_over_sqrt_alpha),
            fmt17(x.beta_over_alpha_pow),
            fmt17(x.m_mp1),
            fmt17(x.omega_over_m2p6),
            fmt17(x.omega_over_mass_pow),
            fmt17(x.omega_m2_over_log2),
            fmt17(x.omega_pow_m_pow),
            opt17(x.slope_mass),
            fmt17(rec.residuals.max()),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// PASS/TREND/FAIL table of law reports.
pub fn law_table(reports: &[AsymptoticsReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<4} {:<30} {:>14} {:>12} {:>6} {:>6}  verdict", "law", "quantity", "target", "final_err", "trend", "mono");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<4} {:<30} {:>14.8} {:>12.4e} {:>6} {:>6}  {}",
            r.law.id(),
            r.quantity,
            r.target.value,
            r.final_error,
            r.trend,
            r.monotone,
            r.verdict.as_str()
        );
    }
    s
}

// ---------------------------------------------------------------------------
// manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub command: String,
    pub config_hash: String,
    pub complete: bool,
    pub exit_code: i32,
    /// file name → SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "MANIFEST.json";

/// Writes files into one output directory and records them for the manifest.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<OutputDir> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn finish(self, command: &str, cfg: &RunConfig, complete: bool, status: ExitStatus) -> Result<Vec<String>> {
        let mut files = BTreeMap::new();
        for f in &self.files {
            files.insert(f.clone(), sha256_hex(&fs::read(self.dir.join(f))?));
        }
        let m = Manifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            schema: SCHEMA_VERSION,
            command: command.into(),
            config_hash: cfg.hash(),
            complete,
            exit_code: status.code(),
            files,
        };
        fs::write(self.dir.join(MANIFEST), json_bytes(&m)?)?;
        let mut out = self.files;
        out.push(MANIFEST.into());
        Ok(out)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    Ok(serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?)
}

/// Files whose current checksum differs from the manifest (missing files
/// included); empty means the directory validates.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let m = read_manifest(dir)?;
    let mut bad = Vec::new();
    for (name, sum) in &m.files {
        match fs::read(dir.join(name)) {
            Ok(b) if &sha256_hex(&b) == sum => {}
            _ => bad.push(name.clone()),
        }
    }
    Ok(bad)
}

// ---------------------------------------------------------------------------
// commands

#[derive(Debug, Clone, Serialize)]
struct SpectrumEntry<'a> {
    branch: Branch,
    m: f64,
    spectrum: Option<&'a SpectrumSummary>,
    error: Option<String>,
}

fn spectra_for(records: &[SolutionRecord], opts: &SpectralOptions) -> Vec<std::result::Result<SpectrumSummary, String>> {
    use rayon::prelude::*;
    records.par_iter().map(|r| spectrum(r, opts).map_err(|e| e.to_string())).collect()
}

fn record_status(rec: &SolutionRecord) -> ExitStatus {
    if !(rec.residuals.max() <= RESIDUAL_TOL) {
        ExitStatus::VerificationFailure
    } else if rec.branch == Branch::Unclassified {
        ExitStatus::Undecided
    } else {
        ExitStatus::Success
    }
}

fn spectrum_status(s: &std::result::Result<SpectrumSummary, String>) -> ExitStatus {
    match s {
        Ok(s) if s.gap_status == GapStatus::Certified => ExitStatus::Success,
        _ => ExitStatus::Undecided,
    }
}

fn require_omega(cfg: &RunConfig) -> Result<f64> {
    cfg.omega.ok_or_else(|| bad("this command needs --omega".into()))
}

/// Solutions at one ω with their spectra, profiles and summary.
pub fn run_solve(cfg: &RunConfig) -> Result<RunOutcome> {
    solve_like(cfg, "solve", true)
}

/// As `run_solve`, writing only the spectral output.
pub fn run_spectrum(cfg: &RunConfig) -> Result<RunOutcome> {
    solve_like(cfg, "spectrum", false)
}

fn solve_like(cfg: &RunConfig, command: &str, full: bool) -> Result<RunOutcome> {
    cfg.validate()?;
    let omega = require_omega(cfg)?;
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let sols = match find_solutions(cfg.p, omega, &cfg.solve_options()) {
        Ok(s) => s,
        Err(e) => {
            let st = error_status(&e);
            out.write("error.txt", format!("{e}\n").as_bytes())?;
            out.finish(command, cfg, false, st)?;
            return Err(e);
        }
    };
    let spectra = spectra_for(&sols.records, &cfg.spectral_options());
    let mut status = if sols.scan.undecided.is_empty() { ExitStatus::Success } else { ExitStatus::Undecided };
    for (r, s) in sols.records.iter().zip(&spectra) {
        status = status.worst(record_status(r)).worst(spectrum_status(s));
    }
    let entries: Vec<SpectrumEntry> = sols
        .records
        .iter()
        .zip(&spectra)
        .map(|(r, s)| SpectrumEntry { branch: r.branch, m: r.m, spectrum: s.as_ref().ok(), error: s.as_ref().err().cloned() })
        .collect();
    out.write("spectra.json", &json_bytes(&entries)?)?;
    if full {
        let rows: Vec<(&SolutionRecord, Option<&SpectrumSummary>)> = sols.records.iter().zip(&spectra).map(|(r, s)| (r, s.as_ref().ok())).collect();
        if cfg.wants(Format::Csv) {
            out.write("solutions.csv", &solutions_csv(&rows)?)?;
        }
        if cfg.wants(Format::Json) {
            #[derive(Serialize)]
            struct Doc<'a> {
                p: f64,
                omega: f64,
                m_range: (f64, f64),
                brackets: &'a [(f64, f64)],
                undecided: &'a [f64],
                records: &'a [SolutionRecord],
            }
            let range = cfg.m_range.unwrap_or_else(|| crate::shooting::default_m_range(cfg.p, omega));
            let doc = Doc { p: cfg.p, omega, m_range: range, brackets: &sols.scan.brackets, undecided: &sols.scan.undecided, records: &sols.records };
            out.write("solutions.json", &json_bytes(&doc)?)?;
        }
        for (i, r) in sols.records.iter().enumerate() {
            let mut b = Vec::new();
            r.profile().write_csv(&mut b)?;
            out.write(&format!("profile_{}_{}.csv", i, r.branch.as_str()), &b)?;
        }
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "p = {}, omega = {:e}: {} solution(s)", cfg.p, omega, sols.records.len());
    if sols.records.is_empty() {
        let _ = writeln!(summary, "no positive solutions found in the amplitude window");
    }
    if !sols.scan.undecided.is_empty() {
        let _ = writeln!(summary, "{} undecided scan amplitude(s)", sols.scan.undecided.len());
    }
    for (r, s) in sols.records.iter().zip(&spectra) {
        let _ = write!(summary, "  {:<12} M = {:.12e}  residual {:.2e}", r.branch.as_str(), r.m, r.residuals.max());
        match s {
            Ok(s) => {
                let _ = writeln!(summary, "  Morse index {}  gap0 {:.3e} ({:?})", s.neg_count, s.gap0, s.gap_status);
            }
            Err(e) => {
                let _ = writeln!(summary, "  spectrum: {e}");
            }
        }
    }
    out.write("summary.txt", summary.as_bytes())?;
    let files = out.finish(command, cfg, true, status)?;
    Ok(RunOutcome { status, summary, files })
}

#[derive(Debug, Clone, Serialize)]
struct SweepDoc<'a> {
    p: f64,
    omegas: &'a [f64],
    rescans: &'a [f64],
    failures: &'a [SweepFailure],
    small: &'a BranchCurve,
    large: &'a BranchCurve,
}

fn write_sweep(out: &mut OutputDir, cfg: &RunConfig, omegas: &[f64], s: &Sweep) -> Result<()> {
    if cfg.wants(Format::Csv) {
        out.write("branch_small.csv", &curve_csv(&s.small)?)?;
        out.write("branch_large.csv", &curve_csv(&s.large)?)?;
        let rows: Vec<(&SolutionRecord, Option<&SpectrumSummary>)> = s.small.points.iter().chain(&s.large.points).map(|r| (r, None)).collect();
        out.write("solutions.csv", &solutions_csv(&rows)?)?;
    }
    if cfg.wants(Format::Json) {
        let doc = SweepDoc { p: s.p, omegas, rescans: &s.rescans, failures: &s.failures, small: &s.small, large: &s.large };
        out.write("sweep.json", &json_bytes(&doc)?)?;
    }
    Ok(())
}

fn run_sweep_inner(cfg: &RunConfig, command: &str) -> Result<(OutputDir, Vec<f64>, Sweep)> {
    cfg.validate()?;
    let omegas = cfg.omegas_for_sweep()?;
    let mut out = OutputDir::create(&cfg.output.dir)?;
    match sweep(cfg.p, &omegas, &cfg.solve_options()) {
        Ok(s) => {
            write_sweep(&mut out, cfg, &omegas, &s)?;
            Ok((out, omegas, s))
        }
        Err(e) => {
            out.write("error.txt", format!("{e}\n").as_bytes())?;
            out.finish(command, cfg, false, error_status(&e))?;
            Err(e)
        }
    }
}

/// Continuation sweep of both branches.
pub fn run_sweep(cfg: &RunConfig) -> Result<RunOutcome> {
    let (mut out, omegas, s) = run_sweep_inner(cfg, "sweep")?;
    let status = if s.failures.is_empty() { ExitStatus::Success } else { ExitStatus::Undecided };
    let mut summary = String::new();
    let _ = writeln!(summary, "p = {}: {} frequencies, {} small / {} large points", cfg.p, omegas.len(), s.small.points.len(), s.large.points.len());
    if !s.rescans.is_empty() {
        let _ = writeln!(summary, "cold rescans at {:?}", s.rescans);
    }
    for f in &s.failures {
        let _ = writeln!(summary, "  lost {} point at omega = {:e}: {}", f.branch.as_str(), f.omega, f.reason);
    }
    out.write("summary.txt", summary.as_bytes())?;
    let files = out.finish("sweep", cfg, true, status)?;
    Ok(RunOutcome { status, summary, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierEntry {
    pub omega: f64,
    pub branch: Branch,
    pub holds: bool,
    pub report: BarrierReport,
    pub energy: EnergyCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyDoc {
    pub p: f64,
    pub laws: Vec<AsymptoticsReport>,
    pub mass_slope: Vec<MassSlope>,
    pub barriers: Vec<BarrierEntry>,
}

/// Sweep, then every applicable law plus barriers, energy and mass slope.
pub fn run_verify(cfg: &RunConfig) -> Result<RunOutcome> {
    let (mut out, _, s) = run_sweep_inner(cfg, "verify")?;
    let laws = if s.large.points.len() >= 4 { verify_all(&s.large)? } else { Vec::new() };
    let slope = if s.large.points.len() >= 3 { mass_slope(&s.large)? } else { Vec::new() };
    let barriers: Vec<BarrierEntry> = s
        .small
        .points
        .iter()
        .chain(&s.large.points)
        .map(|r| {
            let report = check_barriers(r);
            BarrierEntry { omega: r.omega, branch: r.branch, holds: report.holds(), report, energy: energy_bound(r) }
        })
        .collect();
    let mut status = if s.failures.is_empty() { ExitStatus::Success } else { ExitStatus::Undecided };
    if laws.iter().any(|l| l.verdict == Verdict::Fail) || barriers.iter().any(|b| !b.holds) {
        status = status.worst(ExitStatus::VerificationFailure);
    }
    if s.large.points.len() < 4 {
        status = status.worst(ExitStatus::Undecided);
    }
    let table = law_table(&laws);
    let mut summary = format!("p = {}: asymptotic laws along the large branch\n{table}", cfg.p);
    let neg = slope.iter().filter(|m| !m.positive).count();
    let _ = writeln!(summary, "mass slope: {} interior point(s), {} nonpositive (reported, not failed)", slope.len(), neg);
    let _ = writeln!(summary, "barriers: {}/{} solutions within all bounds", barriers.iter().filter(|b| b.holds).count(), barriers.len());
    out.write("laws.txt", summary.as_bytes())?;
    if cfg.wants(Format::Json) {
        out.write("laws.json", &json_bytes(&VerifyDoc { p: cfg.p, laws, mass_slope: slope, barriers })?)?;
    }
    let files = out.finish("verify", cfg, true, status)?;
    Ok(RunOutcome { status, summary, files })
}

/// Fold bracket over the configured window.
pub fn run_fold(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let rep: FoldReport = match detect_fold(cfg.p, cfg.fold_window, &cfg.solve_options()) {
        Ok(r) => r,
        Err(e) => {
            out.write("error.txt", format!("{e}\n").as_bytes())?;
            out.finish("fold", cfg, false, error_status(&e))?;
            return Err(e);
        }
    };
    out.write("fold.json", &json_bytes(&rep)?)?;
    let mut summary = format!(
        "p = {}: fold in omega ∈ [{:.10e}, {:.10e}] (relative width {:.3e}); {} solution(s) below, {} above\n",
        cfg.p,
        rep.bracket.omega_lo,
        rep.bracket.omega_hi,
        rep.rel_width(),
        rep.count_lo,
        rep.count_hi
    );
    if rep.undecided_steps > 0 {
        let _ = writeln!(summary, "{} bisection step(s) left undecided amplitudes", rep.undecided_steps);
    }
    let status = if rep.undecided_steps > 0 { ExitStatus::Undecided } else { ExitStatus::Success };
    let files = out.finish("fold", cfg, true, status)?;
    Ok(RunOutcome { status, summary, files })
}

/// ‖W‖_q^q by the Beta closed form with a quadrature cross-check.
pub fn talenti_text(qs: &[f64], quad_rel: f64) -> Result<String> {
    let mut s = String::new();
    for &q in qs {
        let closed = talenti_lq_norm(q)?;
        let quad = talenti_lq_norm_quadrature_tol(q, quad_rel)?;
        let _ = writeln!(
            s,
            "q = {q}: ||W||_q^q = {}  [4*pi*3*sqrt(3)*B(3/2,(q-3)/2)/2]  quadrature {} (diff {:.1e})",
            fmt17(closed),
            fmt17(quad),
            (closed - quad).abs()
        );
    }
    Ok(s)
}

/// V(0), θ₀ and the start/join diagnostics of the singular profile.
pub fn singular_text(p: f64) -> Result<String> {
    let v = reference_profiles::solve_singular_v_cached(p, USTAR_TOL)?;
    let th = reference_profiles::theta0(p)?;
    Ok(format!(
        "p = {p}: V(0) = {}  theta0 = 3^(-(p-1)/2) V(0)^(p-1) = {}  start residual {:.2e}  join residual {:.2e}\n",
        fmt17(v.central_value),
        fmt17(th),
        v.start_residual,
        v.join_residual
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = RunConfig::default();
        c.tolerances.ode_rel = 0.1;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.m_range = Some((10.0, 1.0));
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.omega = Some(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_roundtrips_and_hash_ignores_dir() {
        let mut c = RunConfig { omega: Some(1e-3), ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let h = c.hash();
        c.output.dir = PathBuf::from("elsewhere");
        c.jobs = Some(3);
        assert_eq!(c.hash(), h);
        c.p = 2.0;
        assert_ne!(c.hash(), h);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"p": 2.0, "omega": 0.001, "tolerances": {"ode_rel": 1e-10}}"#).unwrap();
        assert_eq!(c.tolerances.bisect_rel, Tolerances::default().bisect_rel);
        assert_eq!(c.tolerances.ode_rel, 1e-10);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn seventeen_digits() {
        let s = fmt17(0.1);
        let mant = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mant.len(), 17);
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn exit_ranking() {
        assert_eq!(ExitStatus::Success.worst(ExitStatus::Undecided), ExitStatus::Undecided);
        assert_eq!(ExitStatus::Undecided.worst(ExitStatus::VerificationFailure), ExitStatus::VerificationFailure);
        assert_eq!(error_status(&Error::InvalidInput(String::new())).code(), 3);
        assert_eq!(error_status(&Error::NoFold(String::new())).code(), 2);
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.txt", b"hello").unwrap();
        out.finish("test", &RunConfig::default(), true, ExitStatus::Success).unwrap();
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        fs::write(dir.path().join("a.txt"), b"changed").unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["a.txt".to_string()]);
    }

    #[test]
    fn talenti_text_lists_closed_form() {
        let t = talenti_text(&[6.0], 1e-14).unwrap();
        assert!(t.contains("1.2820992") && t.contains("B(3/2"), "{t}");
    }
}
