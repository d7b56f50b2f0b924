//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument was outside the domain of the requested function.
    #[error("domain error in {what}: {details}")]
    Domain { what: &'static str, details: String },

    /// A grid point fell outside the configured cylinder or height band.
    #[error("grid point ({ix}, {iy}, {ih}) is outside the configured region")]
    InvalidGridPoint { ix: i32, iy: i32, ih: i32 },

    /// The task sits directly above or below the base station, so the
    /// vertical plane through both is undefined.
    #[error("BS-task plane is undefined: task and BS are horizontally coincident")]
    DegeneratePlane,

    /// A problem size exceeded a guarded capacity bound.
    #[error("capacity exceeded in {what}: {n} > {max}")]
    Capacity {
        what: &'static str,
        n: usize,
        max: usize,
    },

    /// Configuration failed validation; the message names the field.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(what: &'static str, details: impl Into<String>) -> Self {
        Error::Domain {
            what,
            details: details.into(),
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
