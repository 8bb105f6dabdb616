use std::io;
use std::net::SocketAddr;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] auralis_core::Error),

    #[error("cannot bind {what} on {addr}: {source}")]
    Bind {
        what: &'static str,
        addr: SocketAddr,
        source: io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ServiceError {
    /// Stable snake_case code for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::Core(e) => e.kind(),
            ServiceError::Bind { .. } => "bind",
            ServiceError::Usage(_) => "usage",
            ServiceError::Io(_) => "io",
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
