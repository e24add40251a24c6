use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants fall into two families (see [`ErrorKind`]): bad input, and
/// numerical or model-validity failures on otherwise valid input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} must be {constraint}, got {value}")]
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("invalid config field `{field}`: {constraint}")]
    Config { field: String, constraint: String },

    #[error("schema mismatch in {path}: expected header `{expected}`, found `{found}`")]
    Schema {
        path: String,
        expected: String,
        found: String,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("integration step {dt:e} s exceeds the stability bound {bound:e} s")]
    StepSize { dt: f64, bound: f64 },

    #[error("above threshold: J = {j:e} A/cm^2 reaches the effective threshold {threshold:e} A/cm^2")]
    AboveThreshold { j: f64, threshold: f64 },

    #[error("no threshold crossing in (0, {j_max:e}] A/cm^2")]
    NoThreshold { j_max: f64 },

    #[error("transient diverged at t = {t:e} s (S = {s:e} cm^-3)")]
    Diverged { t: f64, s: f64 },

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("normal matrix is rank deficient (condition ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: configuration, files, arguments.
    Validation,
    /// Valid input that the model or solver cannot handle.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain { .. }
            | Error::Config { .. }
            | Error::Schema { .. }
            | Error::Parse { .. }
            | Error::Input(_)
            | Error::StepSize { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => ErrorKind::Validation,
            Error::AboveThreshold { .. }
            | Error::NoThreshold { .. }
            | Error::Diverged { .. }
            | Error::Analysis(_)
            | Error::RankDeficient { .. }
            | Error::NotConverged { .. } => ErrorKind::Numerical,
        }
    }

    pub fn config(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Returns `value` if it is finite and strictly positive.
pub fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            constraint: "finite and > 0",
            value,
        })
    }
}

/// Returns `value` if it is finite and non-negative.
pub fn non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            constraint: "finite and >= 0",
            value,
        })
    }
}

pub fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            constraint: "finite",
            value,
        })
    }
}
