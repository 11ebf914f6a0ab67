use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("matrix is not symplectic (defect {defect:.3e} > tolerance {tol:.1e})")]
    NotSymplectic { defect: f64, tol: f64 },
    #[error("matrix is not Hamiltonian (asymmetry of J·H is {0:.3e})")]
    NotHamiltonian(f64),
    #[error("integration accuracy: symplectic defect {defect:.3e} at t = {time}; refine the grid")]
    IntegrationAccuracy { defect: f64, time: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported base point: {0}")]
    UnsupportedBasepoint(String),
    #[error("drift is only differentiable {available} times, {requested} requested")]
    Smoothness { requested: usize, available: usize },
    #[error("control is not supported in [0, {delta}]: |u({time})| = {value:.3e}")]
    SupportViolation { delta: f64, time: f64, value: f64 },
    #[error("target at distance {distance:.3e} exceeds trust radius {radius:.3e}")]
    TrustRadius { distance: f64, radius: f64 },
    #[error("no convergence after {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence { iterations: usize, best_residual: f64 },
    #[error("index condition not witnessed: {0}")]
    InfeasibleSecondOrder(String),
    #[error("no local inverse: {0}")]
    NoLocalInverse(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("json (line {}, column {}): {e}", e.line(), e.column()))
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(format!("toml: {e}"))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let at = e
            .position()
            .map(|p| format!(" (line {})", p.line()))
            .unwrap_or_default();
        Error::Parse(format!("csv{at}: {e}"))
    }
}
