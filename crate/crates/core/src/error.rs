//! Error type shared across the crate.

use alloc::string::String;

/// Broad failure class, used by callers (e.g. the CLI) to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid or inconsistent configuration; fixable by editing inputs.
    Config,
    /// A caller violated an API precondition (dimension mismatch, empty set).
    Contract,
    /// Numerical failure (singular matrix, NaN) during computation.
    Numeric,
    /// A configured limit was exceeded (e.g. mask dimension cap).
    Resource,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("resource limit: {0}")]
    Resource(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Contract(_) => ErrorKind::Contract,
            Error::Numeric(_) => ErrorKind::Numeric,
            Error::Resource(_) => ErrorKind::Resource,
        }
    }

    /// Prefix the message with surrounding context (e.g. the round that failed).
    pub fn with_context(self, ctx: &str) -> Error {
        let wrap = |msg: String| ::alloc::format!("{ctx}: {msg}");
        match self {
            Error::Config(m) => Error::Config(wrap(m)),
            Error::Contract(m) => Error::Contract(wrap(m)),
            Error::Numeric(m) => Error::Numeric(wrap(m)),
            Error::Resource(m) => Error::Resource(wrap(m)),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! err {
    ($variant:ident, $($arg:tt)*) => {
        $crate::error::Error::$variant(::alloc::format!($($arg)*))
    };
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::err!($variant, $($arg)*))
    };
}

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)*) => {
        if !$cond {
            $crate::error::bail!($variant, $($arg)*);
        }
    };
}

pub(crate) use {bail, ensure, err};
