use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A configuration value violated an invariant.
    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    /// A table lookup was outside the loaded range.
    #[error("table lookup out of range: {0}")]
    TableRange(String),

    /// A data or scenario file failed to parse.
    #[error("parse error at {location}: {msg}")]
    Parse { location: String, msg: String },

    /// The problem instance cannot satisfy its lower bounds.
    #[error("infeasible instance: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { field: field.into(), msg: msg.into() }
    }

    pub fn parse(location: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
