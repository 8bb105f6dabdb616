use std::path::PathBuf;

use crate::sir_model::Direction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("position index {index} out of range (grid has {bound} positions)")]
    PositionOutOfRange { index: usize, bound: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid impulse response: {0}")]
    InvalidImpulseResponse(String),

    #[error("incomplete SIR set, missing {}", format_missing(.missing))]
    IncompleteSet { missing: Vec<(usize, Direction)> },

    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },

    #[error("channel count mismatch in {context}: expected {expected}, found {found}")]
    ChannelCount {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("duplicate manifest entry for position {0}, direction {1}")]
    DuplicateEntry(usize, Direction),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("no sync pops detected")]
    NoSyncPops,

    #[error("sync pop count mismatch: found {found}, expected {expected}")]
    CountMismatch { found: usize, expected: usize },

    #[error("requested {requested} samples but only {available} are available")]
    TooShort { requested: usize, available: usize },

    #[error("invalid reflection geometry: {0}")]
    InvalidGeometry(String),

    #[error("uncompensatable latency: round trip exceeds the ITDG by {deficit_s} s")]
    UncompensatableLatency { deficit_s: f64 },

    #[error("recording is silent: {0}")]
    SilentRecording(&'static str),

    #[error("IDW needs at least one node")]
    EmptyNodeSet,

    #[error("gain matrix has {found} positions, engine has {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("trajectory is not sorted by time at line {index}")]
    UnsortedTrajectory { index: usize },

    #[error("invalid engine config: {0}")]
    InvalidConfig(String),

    #[error("invalid decode matrix: {0}")]
    InvalidDecodeMatrix(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("wav {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("unsupported wav format in {path}: {message}")]
    UnsupportedWav { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier, used by the command line for machine-readable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PositionOutOfRange { .. } => "position_out_of_range",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidImpulseResponse(_) => "invalid_ir",
            Error::IncompleteSet { .. } => "incomplete_set",
            Error::SampleRateMismatch { .. } => "sample_rate_mismatch",
            Error::ChannelCount { .. } => "channel_count",
            Error::DuplicateEntry(..) => "duplicate_entry",
            Error::InvalidSweep(_) => "invalid_sweep",
            Error::NoSyncPops => "no_sync_pops",
            Error::CountMismatch { .. } => "count_mismatch",
            Error::TooShort { .. } => "too_short",
            Error::InvalidGeometry(_) => "invalid_geometry",
            Error::UncompensatableLatency { .. } => "uncompensatable_latency",
            Error::SilentRecording(_) => "silent_recording",
            Error::EmptyNodeSet => "empty_node_set",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::UnsortedTrajectory { .. } => "unsorted_trajectory",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidDecodeMatrix(_) => "invalid_decode_matrix",
            Error::Parse { .. } => "parse",
            Error::Manifest { .. } => "manifest",
            Error::Wav { .. } => "wav",
            Error::UnsupportedWav { .. } => "unsupported_wav",
            Error::Io(_) => "io",
        }
    }
}

fn format_missing(missing: &[(usize, Direction)]) -> String {
    missing
        .iter()
        .map(|(p, d)| format!("({p}, {d})"))
        .collect::<Vec<_>>()
        .join(", ")
}
