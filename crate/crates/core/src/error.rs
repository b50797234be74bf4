use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode index {index} out of range for a {modes}-mode state")]
    ModeIndex { index: usize, modes: usize },

    #[error("operation needs a two-mode state, got {0} mode(s)")]
    NotTwoMode(usize),

    #[error("bitmap dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("local oscillator bitmap is empty")]
    EmptyLo,

    #[error("unknown letter '{0}'")]
    UnknownLetter(char),

    #[error("malformed bitmap: {0}")]
    Bitmap(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate abscissae: {0}")]
    Degenerate(String),

    #[error("slope |dN/dO| = {slope:.3e} at O = {overlap:.4} is below the floor {floor:.1e}")]
    InsensitivePoint {
        overlap: f64,
        slope: f64,
        floor: f64,
    },

    #[error("calibration lookup is not monotone near δ = {0:.5} rad")]
    NonMonotone(f64),

    #[error("every letter failed the local-oscillator power check")]
    AllLettersInvalid,

    #[error(
        "target squeezing {target_db:.3} dB is not reachable; loss-limited bound is {bound_db:.3} dB"
    )]
    Unachievable { target_db: f64, bound_db: f64 },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::ModeIndex { .. } => "mode_index",
            Error::NotTwoMode(_) => "not_two_mode",
            Error::DimensionMismatch(..) => "dimension_mismatch",
            Error::EmptyLo => "empty_lo",
            Error::UnknownLetter(_) => "unknown_letter",
            Error::Bitmap(_) => "bitmap",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Degenerate(_) => "degenerate",
            Error::InsensitivePoint { .. } => "insensitive_point",
            Error::NonMonotone(_) => "non_monotone",
            Error::AllLettersInvalid => "all_letters_invalid",
            Error::Unachievable { .. } => "unachievable",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Serialize(_) => "serialize",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
