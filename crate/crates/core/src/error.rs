use std::path::PathBuf;

/// Errors raised anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is missing, unknown, or out of range.
    #[error("configuration error{}: `{key}`: {message}", line_suffix(*.line))]
    Config {
        key: String,
        message: String,
        line: Option<usize>,
    },

    /// Quadrature or table construction failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The ODE integrator gave up on a momentum mode.
    #[error("integration failed at P3 = {p3}, t = {t}: {reason} (state f = {f:e}, g = {g:e}, w = {w:e})")]
    Integration {
        p3: f64,
        t: f64,
        f: f64,
        g: f64,
        w: f64,
        reason: String,
    },

    /// A computation was refused because it would exceed its cost budget.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Input data is malformed (non-finite values, mismatched axes, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A checkpoint belongs to a different scan.
    #[error("checkpoint {path} has fingerprint {found}, expected {expected}; refusing to resume")]
    FingerprintMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
            line: None,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than numerics or I/O.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::FingerprintMismatch { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
