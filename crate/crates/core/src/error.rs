use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),

    #[error("frequency {0} Hz is not part of the scene")]
    UnknownFrequency(f64),

    #[error("transmitter {index} coincides with a grid cell center")]
    SourceOnCell { index: usize },

    #[error("grid of {cells} cells is too large for the dense solver (limit {limit})")]
    DenseTooLarge { cells: usize, limit: usize },

    #[error("iterative solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("solve failed for transmitter {tx}, frequency index {freq}: {source}")]
    Solve {
        tx: usize,
        freq: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular system matrix")]
    Singular,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("sampler chain aborted at outer loop {loop_index}: {source}")]
    ChainAborted {
        loop_index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("missing tensor `{0}`")]
    MissingTensor(String),

    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    TensorShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("container architecture is `{found}`, expected `{expected}`")]
    Architecture { expected: String, found: String },

    #[error("diffusion time {0} outside (0, 1]")]
    TimeOutOfRange(f64),

    #[error("noise scale {eta} exceeds beta(1) = {max}")]
    EtaTooLarge { eta: f64, max: f64 },

    #[error("decoder does not support vector-Jacobian products")]
    VjpUnsupported,

    #[error("region `{0}` lies outside the grid")]
    RegionOutsideGrid(String),

    #[error("reference has zero norm")]
    ZeroReference,

    #[error("image of {nx}x{ny} is smaller than the {window}x{window} window")]
    ImageTooSmall { nx: usize, ny: usize, window: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures that come from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotConverged { .. } | Error::Singular | Error::NonFinite(_) => true,
            Error::Solve { source, .. } | Error::ChainAborted { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
