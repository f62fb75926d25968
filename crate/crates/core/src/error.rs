use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("dressed block M={m} is singular at E={energy} (|det|={det:e}); shift the energy off the real axis")]
    SingularBlock { m: String, energy: String, det: f64 },

    #[error("parameter `{name}` = {value} out of range: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("time series carries no energy")]
    ZeroEnergy,

    #[error("accumulator is empty")]
    EmptyAccumulator,

    #[error("unsupported direction: {0}")]
    UnsupportedDirection(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("failed to parse atomic data table: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn parameter(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Parameter { name, value, reason }
    }
}
