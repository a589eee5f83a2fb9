use std::fmt;

use thiserror::Error;

/// Field-level problem found while validating a scenario document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    /// Dotted path of the offending field, e.g. `anchors[3].prior_cov`.
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("information matrix is singular; the node is not localizable")]
    SingularFim,

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("ill-conditioned subtraction: difference has eigenvalue {min_eigenvalue:e}")]
    IllConditionedSubtraction { min_eigenvalue: f64 },

    #[error("distance {distance} m is below the reference distance d0 = {d0} m{}", pair_suffix(.pair))]
    BelowReferenceDistance {
        distance: f64,
        d0: f64,
        /// (source id, anchor id) when known.
        pair: Option<(String, String)>,
    },

    #[error("invalid propagation model: {0}")]
    InvalidModel(String),

    #[error("singular block: {0}")]
    SingularBlock(String),

    #[error("scenario has no unknown parameters")]
    EmptyParameterVector,

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("unknown parameter path `{0}`")]
    UnknownParameterPath(String),

    #[error("unknown node id `{0}`")]
    UnknownNodeId(String),

    #[error("estimator failed to converge on {failed} of {trials} trials")]
    InsufficientConvergence { failed: usize, trials: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{} validation error(s): {}", .0.len(), join_errors(.0))]
    Validation(Vec<ValidationError>),
}

fn pair_suffix(pair: &Option<(String, String)>) -> String {
    match pair {
        Some((s, a)) => format!(" (source `{s}`, anchor `{a}`)"),
        None => String::new(),
    }
}

fn join_errors(errs: &[ValidationError]) -> String {
    errs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
