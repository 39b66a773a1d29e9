use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape has {elements} elements, enumeration guard is {guard}")]
    ShapeTooLarge { elements: usize, guard: usize },

    #[error("partition is not row-compatible")]
    NotRowCompatible,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("incompatible shapes: {0}")]
    IncompatibleShapes(String),

    #[error("k must be an even integer >= 2, got {0}")]
    KNotEven(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("kernel orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("kernel with {atoms} atoms and order {order} exceeds dense storage guard")]
    KernelTooLarge { atoms: usize, order: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("variance is zero")]
    DegenerateVariance,

    #[error("cumulants are not normalized: second cumulant is {0}")]
    NotNormalized(f64),

    #[error("scale out of range: {0}")]
    OutOfRange(String),

    #[error("sample has {points} points; order {order} exceeds the evaluation guard")]
    TooManyPoints { points: u64, order: usize },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },

    #[error("horizon T = {horizon} must exceed 1/rho = {min}")]
    HorizonTooShort { horizon: f64, min: f64 },

    #[error("mark measure has nonzero mean {0} and compensation is disabled")]
    NonSymmetricNuWithoutCompensator(f64),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for errors caused by a size guard rather than bad input.
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            Error::ShapeTooLarge { .. } | Error::KernelTooLarge { .. } | Error::TooManyPoints { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
