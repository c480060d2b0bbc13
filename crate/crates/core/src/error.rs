use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An integrand or objective returned NaN or an infinity.
    #[error("non-finite evaluation at {at}")]
    Evaluation { at: f64 },

    #[error("root not bracketed: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("config error at `{field}`: {detail}")]
    Config { field: String, detail: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
