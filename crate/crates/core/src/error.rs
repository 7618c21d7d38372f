use thiserror::Error;

/// Errors raised by state construction, linear-algebra operations and the
/// simulations built on top of them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("factor label `{0}` appears more than once")]
    LabelCollision(String),

    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),

    #[error("no factors selected")]
    EmptySelection,

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite amplitude or matrix entry")]
    NonFinite,

    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),

    #[error("probabilities sum to {0}, expected 1")]
    Normalization(f64),

    #[error("negative probability {0}")]
    NegativeProbability(f64),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("channel is not trace preserving (deviation {0:e})")]
    Channel(f64),

    #[error("POVM effects do not sum to identity (deviation {0:e})")]
    Completeness(f64),

    #[error("basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("marker dimension {marker} cannot hold {states} basis states")]
    MarkerCapacity { marker: usize, states: usize },

    #[error("sampled outcome {0} has vanishing probability")]
    DegenerateDistribution(usize),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all slits are closed")]
    EmptyProfile,

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
