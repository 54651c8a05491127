use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the library.
///
/// Latency values in messages are formatted with `{:?}` so that whole
/// numbers keep their decimal point ("4.0 ms", not "4 ms"); diagnostics
/// stay unambiguous when grepped out of logs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration value: {0}")]
    InvalidValue(String),

    #[error("incompatible parents: config from space `{left}` crossed with `{right}`")]
    IncompatibleParents { left: String, right: String },

    #[error(
        "latency target {target_ms:?} ms is infeasible: the minimal configuration \
         of this space measures {minimal_ms:?} ms"
    )]
    InfeasibleTarget { target_ms: f64, minimal_ms: f64 },

    #[error(
        "constraint too tight: {attempts} consecutive candidates rejected \
         at target {target_ms:?} ms"
    )]
    ConstraintTooTight { target_ms: f64, attempts: u64 },

    #[error("warm-start seed measures {latency_ms:?} ms, above the target {target_ms:?} ms")]
    InfeasibleWarmSeed { latency_ms: f64, target_ms: f64 },

    #[error("design space holds {count} configurations, above the enumeration cap {cap}")]
    SpaceTooLarge { count: u128, cap: u128 },

    #[error("latency table has no entry for {0}")]
    IncompleteTable(String),

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON failure: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpace(_)
            | Error::InvalidParams(_)
            | Error::InvalidValue(_)
            | Error::IncompatibleParents { .. }
            | Error::SpaceTooLarge { .. }
            | Error::IncompleteTable(_)
            | Error::Json(_) => 2,
            Error::InfeasibleTarget { .. }
            | Error::ConstraintTooTight { .. }
            | Error::InfeasibleWarmSeed { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}
