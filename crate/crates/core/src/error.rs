use thiserror::Error;

/// Errors raised by the recovery library.
///
/// Variants split into two families: malformed input (wrong shapes, bad
/// parameter values, unreadable files) and model-validity failures (a
/// well-formed input whose mathematics does not admit the requested object).
/// [`Error::is_model_error`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("pricing matrix is not primitive: no power up to {bound} has all entries positive")]
    NotPrimitive { bound: usize },

    #[error("one-period bond price is zero in state {state}")]
    ZeroBondPrice { state: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("transition fails the ergodicity check: {0}")]
    NotErgodic(String),

    #[error("path step {step} moves from state {from} to state {to}, which has zero price")]
    ImpossiblePath { step: usize, from: usize, to: usize },

    #[error("value function has no real solution: discriminant {discriminant:e} < 0 at gamma = {gamma}")]
    NoValueFunction { discriminant: f64, gamma: f64 },

    #[error("eigenfunction quadratic has no real root (discriminant {0:e})")]
    NoEigenRoot(f64),

    #[error("no ergodic selection: {0}")]
    NoErgodicSelection(String),

    #[error("Riccati coefficients explode near t = {time}")]
    BlowUp { time: f64 },

    #[error("{count} simulated paths produced non-finite values")]
    NanPaths { count: usize },

    #[error("bound problem is infeasible: dual objective unbounded along {direction:?}")]
    Infeasible { direction: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the model itself rather than of the input format.
    pub fn is_model_error(&self) -> bool {
        matches!(
            self,
            Error::NotPrimitive { .. }
                | Error::ZeroBondPrice { .. }
                | Error::NoConvergence { .. }
                | Error::NotErgodic(_)
                | Error::ImpossiblePath { .. }
                | Error::NoValueFunction { .. }
                | Error::NoEigenRoot(_)
                | Error::NoErgodicSelection(_)
                | Error::BlowUp { .. }
                | Error::NanPaths { .. }
                | Error::Infeasible { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
