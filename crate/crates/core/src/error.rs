use thiserror::Error;

/// Errors raised by model construction, special-function evaluation and pricing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },

    #[error("model not admissible: {0}")]
    Inadmissible(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("invalid input data: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter { name: name.into(), reason: reason.into() }
    }

    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical { context, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
