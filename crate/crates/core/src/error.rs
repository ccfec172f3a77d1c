use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: non-finite value in column {column}")]
    NonFinite { line: usize, column: usize },

    #[error("dataset has {0} classes; at least 2 are required")]
    TooFewClasses(usize),

    #[error("class {class} has {count} examples; at least {required} are required")]
    ClassTooSmall {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("weak learner failed: {0}")]
    Learner(String),

    #[error("round {round}: {source}")]
    Round { round: usize, source: Box<Error> },

    #[error("master solver stopped after {iterations} iterations with duality gap {gap:e}")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("linear program: {0}")]
    LinearProgram(String),

    #[error("ensemble has no rounds")]
    EmptyEnsemble,

    #[error("no valid coding matrix found after {0} candidates")]
    NoValidCode(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_round(self, round: usize) -> Error {
        match self {
            e @ Error::Round { .. } => e,
            e => Error::Round {
                round,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with round annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Round { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for failures caused by the input data rather than the configuration or a solver.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Parse { .. }
                | Error::NonFinite { .. }
                | Error::TooFewClasses(_)
                | Error::ClassTooSmall { .. }
                | Error::Io(_)
        )
    }

    pub fn is_solver_error(&self) -> bool {
        matches!(
            self.root(),
            Error::NonConvergence { .. } | Error::LinearProgram(_) | Error::Learner(_)
        )
    }
}
