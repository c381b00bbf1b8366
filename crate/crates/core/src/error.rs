use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller supplied arguments outside the operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// Inputs are well-formed but the statistic is undefined on them
    /// (zero variance, all-zero products, empty window...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {what} (estimated error {estimate:e} > tolerance {tolerance:e} after {evaluations} evaluations)")]
    Numerical {
        what: String,
        estimate: f64,
        tolerance: f64,
        evaluations: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}

pub(crate) fn check_correlation(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value.abs() <= 1.0) {
        return Err(Error::input(format!("{name} must lie in [-1, 1], got {value}")));
    }
    Ok(())
}

pub(crate) fn check_open_correlation(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value.abs() < 1.0) {
        return Err(Error::input(format!("{name} must lie in (-1, 1), got {value}")));
    }
    Ok(())
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::input(format!("{name} must be a probability, got {value}")));
    }
    Ok(())
}
