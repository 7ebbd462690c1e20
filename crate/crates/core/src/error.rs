use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration field failed validation.
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite {what}")]
    NonFinite { what: &'static str },

    #[error("flux vector is zero, sector is undefined")]
    UndefinedSector,

    #[error("switching window incomplete: {elapsed} s elapsed of {window} s")]
    IncompleteWindow { elapsed: f64, window: f64 },

    #[error("no samples in window [{t0}, {t1}]")]
    EmptyWindow { t0: f64, t1: f64 },

    #[error("numerical failure at t = {t} s")]
    Numerical {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("scenarios are not comparable: {0}")]
    Mismatch(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } | Error::NonFinite { .. } | Error::UndefinedSector => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}
