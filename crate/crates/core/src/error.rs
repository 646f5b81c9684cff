use thiserror::Error;

/// Errors raised by the matrix, special-function, solver and oracle layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function pole at x = {0}")]
    GammaPole(f64),

    #[error("gamma function overflows at x = {0}")]
    GammaOverflow(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("series did not converge within {max_terms} terms (last term norm {last_norm:e})")]
    NonConvergence { max_terms: usize, last_norm: f64 },

    #[error("singular term at t = {t}: zero base with negative exponent {exponent}")]
    Singularity { t: f64, exponent: f64 },

    #[error("matrices do not commute (||AB - BA|| = {0:e})")]
    NonCommuting(f64),

    #[error("history Caputo derivative not supplied and numeric fallback disabled")]
    MissingDerivative,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluation failed at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, t: f64) -> Self {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                t,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
