use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The term cap of a [`TruncationPolicy`](crate::TruncationPolicy) was hit
    /// before the residual mass could be certified.
    #[error("truncation cap of {max_terms} terms exhausted before certification (accumulated mass {mass:.17e})")]
    CapExhausted { max_terms: u64, mass: f64 },

    /// Only moment orders with known closed forms are accepted.
    #[error("unsupported moment order {0}")]
    UnsupportedOrder(u32),

    /// The operation needs a derivative the function does not provide.
    #[error("function `{0}` has no registered second derivative")]
    MissingDerivative(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
