use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsupported configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A serialized artifact that cannot be parsed.
    #[error("malformed input: {0}")]
    Malformed(String),

    /// The entropy decoder ran off the end of, or did not exhaust, its stream.
    #[error("bitstream desynchronized: {0}")]
    Desync(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
