use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One failed invariant found while checking a model or configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub value: f64,
    pub invariant: &'static str,
}

/// Every invariant violation found in one validation pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn push(&mut self, field: impl Into<String>, value: f64, invariant: &'static str) {
        self.violations.push(Violation {
            field: field.into(),
            value,
            invariant,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.violations.iter().map(|v| v.field.as_str())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            write!(f, " [{} = {}: {}]", v.field, v.value, v.invariant)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    Validation(ValidationReport),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("step size {dt_us} us exceeds stability limit {limit_us} us")]
    StepTooLarge { dt_us: f64, limit_us: f64 },

    #[error("no peak in window: {0}")]
    NoPeak(String),

    #[error("window contains {maxima} maxima above half range; narrow the window around a single peak")]
    MultiModal { maxima: usize },

    #[error("parameter `{parameter}` is not identifiable from the data (rank-deficient Jacobian)")]
    Unidentifiable { parameter: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("key `{key}` has no unit tag (expected a suffix such as {expected})")]
    UnitTagMissing { key: String, expected: &'static str },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("table {path}: {message}")]
    Table { path: PathBuf, message: String },

    #[error("output {0} already exists (pass --overwrite to replace it)")]
    OutputExists(PathBuf),

    #[error("unknown subcommand `{0}`")]
    UnknownCommand(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for validation-class failures, 3 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
