use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid density argument")]
    InvalidDensityArgument,
    #[error("invalid update: non-finite Kalman input")]
    InvalidUpdate,
    #[error("degenerate filter at t = {t}: zero likelihood estimate")]
    DegenerateFilter { t: usize },
    #[error("weights are not normalized (sum = {sum})")]
    UnnormalizedWeights { sum: f64 },
    #[error("nonstationary parameters: {name} = {value} is outside (0, 1)")]
    NonstationaryParameters { name: &'static str, value: f64 },
    #[error("singular information matrix")]
    SingularInformation,
    #[error("empty trace after burn-in")]
    EmptyTrace,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
