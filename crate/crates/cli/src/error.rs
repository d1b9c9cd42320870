use geoconvex::expr::ParseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("problem file line {line}: {message}")]
    ProblemFile { line: usize, message: String },

    #[error("expression on line {line}: {error}")]
    Expression { line: usize, error: ParseError },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Core(#[from] geoconvex::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ProblemFile { .. } => "ProblemFileError",
            CliError::Expression { .. } => "ParseError",
            CliError::Argument(_) => "InvalidArgument",
            CliError::Io { .. } => "IoError",
            CliError::Core(e) => e.kind(),
        }
    }

    /// 3 for numeric non-certification, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_inconclusive() => 3,
            _ => 2,
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match self {
            CliError::Expression { error, .. } => Some(error.offset),
            CliError::Core(geoconvex::Error::Parse(e)) => Some(e.offset),
            CliError::Core(geoconvex::Error::EvalDomain(e)) => Some(e.offset),
            _ => None,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            CliError::ProblemFile { line, .. } | CliError::Expression { line, .. } if *line > 0 => Some(*line),
            _ => None,
        }
    }
}
