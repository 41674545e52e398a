use std::io;

/// Errors produced by tensor construction, kernels and the APB layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid tensor data: {0}")]
    InvalidData(String),

    #[error("invalid {{t, h, m}} encoding at ({row}, {col}): t={t} h={h} m={m}")]
    InvalidEncoding {
        row: usize,
        col: usize,
        t: bool,
        h: bool,
        m: bool,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shared dimension {k} exceeds the accumulator bound {max}")]
    AccumulatorBound { k: usize, max: usize },

    #[error("tensor format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure_dims {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::Error::DimensionMismatch(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure_dims;
