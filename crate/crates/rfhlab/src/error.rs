//! Crate-wide error and the exit-code mapping used by the binary.

use thiserror::Error;

use crate::gradflow::FlowError;
use crate::grading::GradingError;
use crate::hybrid::HybridError;
use crate::model::ModelError;
use crate::rsindex::IndexError;
use crate::symlin::SymlinError;
use crate::z2complex::ComplexError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invariant violated ({invariant}): {detail}")]
    Invariant { invariant: String, detail: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invariant(invariant: &str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant: invariant.into(),
            detail: detail.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::Numerical(_) => 3,
            Error::Invariant { .. } => 4,
        }
    }
}

impl From<SymlinError> for Error {
    fn from(e: SymlinError) -> Self {
        match e {
            SymlinError::NotSymplectic(_) | SymlinError::NegativeDeterminant(_) => {
                Error::invariant("symplecticity", e.to_string())
            }
            SymlinError::Degenerate(_) => Error::Numerical(e.to_string()),
            _ => Error::Config(e.to_string()),
        }
    }
}

impl From<IndexError> for Error {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Linear(l) => l.into(),
            IndexError::IrregularCrossing { .. } | IndexError::Resolution(_) | IndexError::StepSize(_) => {
                Error::Numerical(e.to_string())
            }
            _ => Error::Config(e.to_string()),
        }
    }
}

impl From<ModelError> for Error {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Index(i) => i.into(),
            ModelError::Invalid(m) => Error::Config(m),
        }
    }
}

impl From<GradingError> for Error {
    fn from(e: GradingError) -> Self {
        match e {
            GradingError::Index(i) => i.into(),
            GradingError::Branches(..) => Error::invariant("hybrid index branch consistency", e.to_string()),
            _ => Error::Config(e.to_string()),
        }
    }
}

impl From<FlowError> for Error {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::InvalidLoop(_) | FlowError::Config(_) => Error::Config(e.to_string()),
            FlowError::ActionIncrease { .. } => Error::invariant("action monotonicity", e.to_string()),
            _ => Error::Numerical(e.to_string()),
        }
    }
}

impl From<HybridError> for Error {
    fn from(e: HybridError) -> Self {
        match e {
            HybridError::Flow(f) => f.into(),
            HybridError::Coupling(_) => Error::invariant("coupling condition", e.to_string()),
            HybridError::ActionChain(_) => Error::invariant("action chain", e.to_string()),
            HybridError::Invalid(_) => Error::Config(e.to_string()),
        }
    }
}

impl From<ComplexError> for Error {
    fn from(e: ComplexError) -> Self {
        match e {
            ComplexError::Filtration { .. } => Error::invariant("action filtration", e.to_string()),
            ComplexError::Grading { .. } => Error::invariant("degree", e.to_string()),
            ComplexError::NotInvertible(_) => Error::invariant("unit diagonal", e.to_string()),
            ComplexError::DSquared(_) => Error::invariant("d^2 = 0", e.to_string()),
            _ => Error::Config(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
