//! dpnls command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpnls::report::{self, error_status, ExitStatus, Format, RunConfig, RunOutcome};

#[derive(Parser, Debug)]
#[command(name = "dpnls", version, about = "Positive radial solutions of -Δu + ωu - u^p - u^5 = 0 in R^3")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// All solutions at one frequency, with spectra and profiles.
    Solve(Common),
    /// Continue both branches over a decreasing frequency list.
    Sweep(Common),
    /// Sweep and check every asymptotic law that applies at p.
    Verify(Common),
    /// Morse index and non-degeneracy gap at one frequency.
    Spectrum(Common),
    /// Fold bracket in ω.
    Fold(Common),
    /// ‖W‖_q^q for the given exponents.
    Talenti {
        #[arg(required = true, num_args = 1..)]
        q: Vec<f64>,
        #[arg(long = "tol-quad")]
        tol_quad: Option<f64>,
    },
    /// Central value of the singular half-line profile and θ₀.
    Singular {
        #[arg(long)]
        p: f64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long = "omega-list", value_delimiter = ',')]
    omega_list: Option<Vec<f64>>,
    /// lo,hi
    #[arg(long = "m-range", value_delimiter = ',')]
    m_range: Option<Vec<f64>>,
    /// lo,hi frequency window for the fold search.
    #[arg(long = "fold-window", value_delimiter = ',')]
    fold_window: Option<Vec<f64>>,
    #[arg(long = "n-grid")]
    n_grid: Option<usize>,
    #[arg(long = "tol-ode-rel")]
    tol_ode_rel: Option<f64>,
    #[arg(long = "tol-ode-abs")]
    tol_ode_abs: Option<f64>,
    #[arg(long = "tol-bisect")]
    tol_bisect: Option<f64>,
    #[arg(long = "tol-quad")]
    tol_quad: Option<f64>,
    #[arg(long = "tol-zero")]
    tol_zero: Option<f64>,
    #[arg(long = "spec-R")]
    spec_r: Option<f64>,
    #[arg(long = "spec-n")]
    spec_n: Option<usize>,
    #[arg(long = "spec-k")]
    spec_k: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or both (comma-separated).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

fn pair(flag: &str, v: &[f64]) -> dpnls::Result<(f64, f64)> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(dpnls::Error::InvalidInput(format!("--{flag} takes exactly two values lo,hi"))),
    }
}

/// stdout may be a closed pipe (`| head`); losing the summary is fine.
fn emit(s: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes()).and_then(|_| out.flush());
}

impl Common {
    fn config(&self) -> dpnls::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.omega {
            c.omega = Some(v);
        }
        if let Some(v) = &self.omega_list {
            c.omega_list = Some(v.clone());
        }
        if let Some(v) = &self.m_range {
            c.m_range = Some(pair("m-range", v)?);
        }
        if let Some(v) = &self.fold_window {
            c.fold_window = pair("fold-window", v)?;
        }
        if let Some(v) = self.n_grid {
            c.n_grid = v;
        }
        if let Some(v) = self.tol_ode_rel {
            c.tolerances.ode_rel = v;
        }
        if let Some(v) = self.tol_ode_abs {
            c.tolerances.ode_abs = v;
        }
        if let Some(v) = self.tol_bisect {
            c.tolerances.bisect_rel = v;
        }
        if let Some(v) = self.tol_quad {
            c.tolerances.quad_rel = v;
        }
        if let Some(v) = self.tol_zero {
            c.spectral.tol_zero = v;
        }
        if let Some(v) = self.spec_r {
            c.spectral.r = Some(v);
        }
        if let Some(v) = self.spec_n {
            c.spectral.n = v;
        }
        if let Some(v) = self.spec_k {
            c.spectral.k = v;
        }
        if let Some(v) = self.jobs {
            c.jobs = Some(v);
        }
        if let Some(v) = &self.out {
            c.output.dir = v.clone();
        }
        if let Some(v) = &self.format {
            c.output.formats = v.iter().map(|s| s.parse::<Format>()).collect::<dpnls::Result<Vec<_>>>()?;
            c.output.formats.sort();
            c.output.formats.dedup();
        }
        c.validate()?;
        Ok(c)
    }
}

fn install_pool(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // a second initialisation only happens in tests; ignore it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run_with(common: &Common, f: fn(&RunConfig) -> dpnls::Result<RunOutcome>) -> ExitStatus {
    let cfg = match common.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    install_pool(cfg.jobs);
    match f(&cfg) {
        Ok(o) => {
            emit(&format!("{}wrote {} file(s) to {}\n", o.summary, o.files.len(), cfg.output.dir.display()));
            o.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_status(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match &cli.cmd {
        Cmd::Solve(c) => run_with(c, report::run_solve),
        Cmd::Sweep(c) => run_with(c, report::run_sweep),
        Cmd::Verify(c) => run_with(c, report::run_verify),
        Cmd::Spectrum(c) => run_with(c, report::run_spectrum),
        Cmd::Fold(c) => run_with(c, report::run_fold),
        Cmd::Talenti { q, tol_quad } => {
            let tol = tol_quad.unwrap_or(report::Tolerances::default().quad_rel);
            if !(tol > 0.0 && tol <= 1e-2) {
                eprintln!("configuration error: quadrature tolerance {tol} outside (0, 1e-2]");
                ExitStatus::ConfigError
            } else {
                match report::talenti_text(q, tol) {
                    Ok(s) => {
                        emit(&s);
                        ExitStatus::Success
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitStatus::ConfigError
                    }
                }
            }
        }
        Cmd::Singular { p } => match report::singular_text(*p) {
            Ok(s) => {
                emit(&s);
                ExitStatus::Success
            }
            Err(e) => {
                eprintln!("error: {e}");
                error_status(&e)
            }
        },
    };
    ExitCode::from(status.code() as u8)
}
