use std::fmt;

/// Coarse failure class, used by the command-line front end to pick an exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Validation,
    Numerical,
    Io,
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Validation => "validation",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("mesh validation failed for cells {cells:?}: {message}")]
    Validation { cells: Vec<usize>, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("problem definition: {0}")]
    Problem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("local system of cell {cell} is not factorizable: {reason}")]
    LocalSystem { cell: usize, reason: String },

    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("matrix is singular (column {column})")]
    Singular { column: usize },

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("system too large for the dense oracle: {unknowns} unknowns (limit {limit})")]
    SizeGuard { unknowns: usize, limit: usize },

    #[error("convergence order undefined: {0}")]
    UndefinedOrder(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidGeometry(_) | Error::Validation { .. } | Error::Parse { .. } => {
                ErrorCategory::Validation
            }
            Error::Problem(_) | Error::Config(_) => ErrorCategory::Usage,
            Error::LocalSystem { .. }
            | Error::NotSpd { .. }
            | Error::Singular { .. }
            | Error::NonConvergence { .. }
            | Error::SizeGuard { .. }
            | Error::UndefinedOrder(_) => ErrorCategory::Numerical,
            Error::Io(_) => ErrorCategory::Io,
        }
    }

    pub(crate) fn validation(cells: Vec<usize>, message: impl Into<String>) -> Self {
        Error::Validation {
            cells,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
