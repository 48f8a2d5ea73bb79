use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function or operation.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    /// A quadrature rule was requested outside the supported orders.
    #[error("quadrature order {0} outside supported range [1, 2048]")]
    QuadratureOrder(usize),

    /// A kernel was discretized on a rule covering a different interval.
    #[error("kernel domain {kernel} does not match rule domain {rule}")]
    DomainMismatch { kernel: String, rule: String },

    /// A linear system in the Nystrom discretization is numerically singular.
    #[error("singular system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    /// ODE integration left its stable window or the solution blew up.
    #[error("integration failed at t = {at}: {msg}")]
    Integration { at: f64, msg: String },

    /// The requested (regime, beta, xi, route) combination is not available.
    #[error("unsupported query: {0}")]
    Capability(String),

    /// Invalid query or configuration parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        func,
        msg: msg.into(),
    }
}
