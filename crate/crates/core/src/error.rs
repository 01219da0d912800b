use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{quantity} must be {requirement}, got {value}")]
    OutOfRange {
        quantity: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("{0} diverges at zero speed")]
    ZeroSpeed(&'static str),

    #[error("run {label}: stop time must be positive, got {stop_time} s")]
    InvalidRun { label: String, stop_time: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("elasticity undefined: threshold is zero at {speed_mph} mph")]
    ZeroReference { speed_mph: f64 },

    #[error("at {speed_mph} mph: {source}")]
    AtGridPoint { speed_mph: f64, source: Box<Error> },

    #[error("invalid trajectory: {0}")]
    Trajectory(&'static str),

    #[error("column {column}: {reason}")]
    Field {
        column: &'static str,
        reason: String,
    },

    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
}

impl Error {
    pub(crate) fn out_of_range(
        quantity: &'static str,
        requirement: &'static str,
        value: f64,
    ) -> Self {
        Error::OutOfRange {
            quantity,
            requirement,
            value,
        }
    }
}
