use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resonance {value} MHz for transducer {k} is outside [{min}, {max}] MHz")]
    ResonanceOutOfRange { k: u8, value: f64, min: f64, max: f64 },

    #[error("path shape does not fit the channel: {0}")]
    PathOutOfBounds(String),

    #[error("unknown glyph {0:?} in letter path")]
    UnknownGlyph(char),

    #[error("bubbles did not coalesce within {steps} steps (largest cluster holds {fraction:.3} of the volume)")]
    CoalescenceFailed { steps: usize, fraction: f64 },

    #[error("combo {combo_id} failed to coalesce after {attempts} attempts")]
    CollectFailed { combo_id: usize, attempts: usize },

    #[error("no samples for transducer k={k}")]
    MissingTransducer { k: u8 },

    #[error("transducer k={k} has no samples at {f_mhz} MHz")]
    EmptyFrequencyBin { k: u8, f_mhz: f64 },

    #[error("matrix shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: [usize; 4], right: [usize; 4] },

    #[error("{path}: header mismatch, expected `{expected}`, found `{found}`")]
    Header { path: PathBuf, expected: String, found: String },

    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: u64, message: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
