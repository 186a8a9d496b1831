use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pencil (E, A) is singular: det(λE − A) vanishes at every probe")]
    SingularPencil,
    #[error("Wong sequences did not stabilize within {0} iterations")]
    ConvergenceFailure(usize),
    #[error("matrix is not nilpotent within tolerance")]
    NotNilpotent,
    #[error("input of length {len} is shorter than the nilpotency index {s}")]
    TooShort { len: usize, s: usize },
    #[error("trajectory carries no state samples")]
    MissingStates,
    #[error("index range out of bounds: {0}")]
    OutOfRange(String),
    #[error("window mismatch: {0}")]
    WindowMismatch(String),
    #[error("not enough data: {0}")]
    DataTooShort(String),
    #[error("horizon L = {l} must be at least {min}")]
    HorizonTooShort { l: usize, min: usize },
    #[error("input not persistently exciting of order {required} (achieved {achieved})")]
    InsufficientExcitation { required: usize, achieved: usize },
    #[error("window is not parameterizable by the data (residual {residual:e})")]
    NotParameterizable { residual: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("excitation data not persistently exciting after {attempts} attempts")]
    ExcitationDeficient { attempts: usize },
    #[error("infeasible dimensions: {0}")]
    InfeasibleDimensions(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("network is disconnected")]
    DisconnectedNetwork,
    #[error("matrix inversion failed: {0}")]
    Singular(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
