use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("||W||_q^q diverges for q = {q} (needs q > 3)")]
    NonIntegrable { q: f64 },
    #[error("step size underflow at r = {r:e}")]
    StepUnderflow { r: f64 },
    #[error("non-finite value in right-hand side at r = {r:e}")]
    NonFinite { r: f64 },
    #[error("step budget exhausted at r = {r:e}")]
    TooManySteps { r: f64 },
    #[error("series start rejected: residual {residual:e} at r = {r:e}")]
    SeriesStart { r: f64, residual: f64 },
    #[error("no sign-change bracket found: {0}")]
    BracketNotFound(String),
    #[error("bracket collapsed without a decaying trajectory: {0}")]
    BracketCollapse(String),
    #[error("undecided trajectory: {0}")]
    Undecided(String),
    #[error("tail model missing and truncation estimate {estimate:e} is not negligible")]
    TailMissing { estimate: f64 },
    #[error("requested radius {requested:e} beyond profile coverage {covered:e}")]
    Coverage { requested: f64, covered: f64 },
    #[error("eigencounters disagree: oscillation {oscillation}, sturm {sturm}")]
    CounterDisagreement { oscillation: usize, sturm: usize },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("no fold in window: {0}")]
    NoFold(String),
    #[error("fold predicate not monotone across window: {0}")]
    NonMonotone(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
