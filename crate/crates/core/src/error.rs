use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller-supplied data violates a precondition (dimension mismatch,
    /// invalid exponent, aliasing configuration, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Two objects that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The requested quantity is not defined for this configuration
    /// (zero map bounds, all-degenerate ensembles, ...).
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// A named preset does not exist.
    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    /// A spec, catalog, or field file failed to parse or validate.
    #[error("malformed file: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
