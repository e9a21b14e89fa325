use thiserror::Error;

/// Failures raised anywhere in the simulator.
///
/// Variants are grouped so that front ends can map them onto a small set of
/// exit statuses: validation problems, numerical guards, and I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I_{order}({x}) overflows a 64-bit float")]
    BesselOverflow { order: u32, x: f64 },

    #[error("series for I_{order}({x}) did not converge within {terms} terms")]
    SeriesNotConverged { order: u32, x: f64, terms: usize },

    #[error("truncation unreachable: tail mass still {tail:e} at N = {cap} (xi = {xi}, q = {q})")]
    TruncationUnreachable { xi: f64, q: u32, cap: usize, tail: f64 },

    #[error("pair cat superposition is numerically null (norm^2 = {norm_sqr:e})")]
    DegenerateState { norm_sqr: f64 },

    #[error("grid too small: |psi| = {boundary_max:e} on the boundary exceeds {threshold:e}")]
    GridTooSmall { boundary_max: f64, threshold: f64 },

    #[error("grid too coarse: trapezoid norm estimate {norm_estimate} outside (0, 1.05]")]
    GridTooCoarse { norm_estimate: f64 },

    #[error("time {t} lies outside the piecewise profile [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("norm drift {drift:e} exceeds {limit:e} at t = {t}; step size too coarse")]
    NormDrift { drift: f64, limit: f64, t: f64 },

    #[error("oracle paths disagree by {difference:e} (limit {limit:e})")]
    OracleDisagreement { difference: f64, limit: f64 },

    #[error("linear entropy order must be >= 2, got {0}")]
    InvalidOrder(u32),

    #[error("{}", format_config_errors(.0))]
    Config(Vec<ConfigIssue>),

    #[error("I/O error: {0}")]
    Io(String),
}

/// One problem found while reading a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line number, when the problem is tied to a line.
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn format_config_errors(issues: &[ConfigIssue]) -> String {
    let mut out = format!("{} configuration error(s)", issues.len());
    for issue in issues {
        out.push_str("\n  ");
        out.push_str(&issue.to_string());
    }
    out
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_)
            | Error::InvalidOrder(_)
            | Error::Config(_)
            | Error::OutOfRange { .. } => ErrorClass::Validation,
            Error::BesselOverflow { .. }
            | Error::SeriesNotConverged { .. }
            | Error::TruncationUnreachable { .. }
            | Error::DegenerateState { .. }
            | Error::GridTooSmall { .. }
            | Error::GridTooCoarse { .. }
            | Error::NormDrift { .. }
            | Error::OracleDisagreement { .. } => ErrorClass::Numerical,
            Error::Io(_) => ErrorClass::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
