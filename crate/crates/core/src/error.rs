use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameters outside the model's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Chain too long for dense matrices.
    #[error("capacity error: L = {sites} exceeds the dense cap of {cap} sites")]
    Capacity { sites: usize, cap: usize },

    #[error("degenerate ground state (splitting {splitting:e}); use a finite inverse temperature")]
    Degeneracy { splitting: f64 },

    /// Two degenerate levels carry different weights, which no Gibbs state does.
    #[error("levels {n} and {m} are degenerate but carry weights {p_n:e} and {p_m:e}")]
    NumericalDegeneracy { n: usize, m: usize, p_n: f64, p_m: f64 },

    #[error("Bloch vector modulus {0:e} is too small to define a direction")]
    SingularDirection(f64),

    #[error("finite-difference step {step:e} is below the resolvable limit {limit:e}")]
    StepSize { step: f64, limit: f64 },

    #[error("unsupported sector: {0}")]
    Unsupported(String),

    #[error("no interior maximum in the scanned range [{lo}, {hi}]")]
    ScanRange { lo: f64, hi: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("quadrature did not converge: error estimate {achieved:e} above tolerance {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("outside the quantum-critical regime: {0}")]
    Regime(String),

    #[error("every outcome probability is below the floor {floor:e}")]
    DegenerateDistribution { floor: f64 },

    #[error("posterior mass {mass:.4} sits in the outer bins at the {side} edge of the grid")]
    GridTooNarrow { side: &'static str, mass: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::Capacity { .. } => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
