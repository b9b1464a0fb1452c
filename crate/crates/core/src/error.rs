use std::path::PathBuf;

use crate::lut::LutKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Configuration problem: bad key, bad value, out-of-range parameter.
    #[error("config error: {0}")]
    Config(String),

    #[error("value {value} outside range [{min}, {max}]")]
    Range { value: f64, min: f64, max: f64 },

    #[error("address {addr} out of bounds (size {len})")]
    Bounds { addr: usize, len: usize },

    #[error("{0} has no ROM plane")]
    UnsupportedMode(&'static str),

    #[error("LUT kind {0:?} is not registered in the directory")]
    Directory(LutKind),

    #[error("LUT build failed: {0}")]
    LutBuild(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("mapping error in layer {layer}: {msg}")]
    Mapping { layer: usize, msg: String },

    #[error("incomplete output: {0}")]
    Incomplete(String),

    #[error("scheduling error: {0}")]
    Schedule(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("input error: {0}")]
    Input(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Configuration errors map to exit code 1, everything else to 2.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Range { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
