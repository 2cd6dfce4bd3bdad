use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested times need epochs finer than the configured level cap.
    #[error("level cap exceeded: time {time} needs epochs finer than level {max_level}")]
    LevelCap { time: f64, max_level: u32 },

    #[error("mollified field has not been constructed; build it with `MollifiedField::build`")]
    UnbuiltMollification,

    #[error("mollifier construction failed: {0}")]
    Mollifier(String),

    #[error("level mismatch: {0}")]
    LevelMismatch(String),

    #[error("time {0} is not a dyadic time 2^-m")]
    NonDyadicTime(f64),

    #[error("support exceeds window: {0}")]
    Window(String),

    #[error("localizer violates the average-1/2 condition on square {square:?}: mean {mean}")]
    Localizer { square: (i64, i64), mean: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
