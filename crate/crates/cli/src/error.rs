use revlab::analyze::AnalyzeError;
use revlab::chain::ChainError;
use revlab::divergence::DivergenceError;
use revlab::linalg::LinalgError;
use revlab::project::ProjectError;
use revlab::reversiblize::ReversiblizeError;
use revlab::verify::VerifyError;
use thiserror::Error;

/// Failures of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 2: unreadable or malformed input, bad flag values.
    #[error("{0}")]
    Parse(String),
    /// Exit 3: input or output breaks a structural invariant.
    #[error("{0}")]
    Invariant(String),
    /// Exit 4: the requested quantity is undefined or unbounded.
    #[error("{0}")]
    Domain(String),
    /// Exit 5: an operation needing a π-reversible generator got one that is not.
    #[error("{0}")]
    NotReversible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Invariant(_) => 3,
            Self::Domain(_) => 4,
            Self::NotReversible(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Parse(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        Self::Domain(e.to_string())
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::Reducible => Self::Domain(e.to_string()),
            ChainError::Linalg(inner) => inner.into(),
            _ => Self::Invariant(e.to_string()),
        }
    }
}

impl From<DivergenceError> for CliError {
    fn from(e: DivergenceError) -> Self {
        match e {
            DivergenceError::Chain(inner) => inner.into(),
            DivergenceError::BadAlpha(_) | DivergenceError::BadFamilyParameter(_) | DivergenceError::Unknown(_) => {
                Self::Parse(e.to_string())
            }
            DivergenceError::UndefinedTerm { .. } | DivergenceError::NoComparableEdges | DivergenceError::NotSmooth(_) => {
                Self::Domain(e.to_string())
            }
        }
    }
}

impl From<ReversiblizeError> for CliError {
    fn from(e: ReversiblizeError) -> Self {
        match e {
            ReversiblizeError::Chain(inner) => inner.into(),
            ReversiblizeError::BadParams(_) | ReversiblizeError::Parse(_) => Self::Parse(e.to_string()),
            ReversiblizeError::MeanNotAdmissible(_) | ReversiblizeError::UnboundedRate { .. } => {
                Self::Domain(e.to_string())
            }
        }
    }
}

impl From<ProjectError> for CliError {
    fn from(e: ProjectError) -> Self {
        match e {
            ProjectError::Chain(inner) => inner.into(),
            ProjectError::Divergence(inner) => inner.into(),
            ProjectError::Reversiblize(inner) => inner.into(),
            ProjectError::BadAlpha(_) | ProjectError::BadParams(_) => Self::Parse(e.to_string()),
            ProjectError::NotStrictlyConvex(_) | ProjectError::DerivativeAtOneNonzero { .. } => {
                Self::Domain(e.to_string())
            }
        }
    }
}

impl From<AnalyzeError> for CliError {
    fn from(e: AnalyzeError) -> Self {
        match e {
            AnalyzeError::Chain(inner) => inner.into(),
            AnalyzeError::Linalg(inner) => inner.into(),
            AnalyzeError::NotReversible { .. } => Self::NotReversible(e.to_string()),
            AnalyzeError::BadQuery(_) => Self::Parse(e.to_string()),
            AnalyzeError::NotCentered(_) | AnalyzeError::Reducible | AnalyzeError::Unreachable { .. } => {
                Self::Domain(e.to_string())
            }
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Chain(inner) => inner.into(),
            VerifyError::Divergence(inner) => inner.into(),
            VerifyError::Reversiblize(inner) => inner.into(),
            VerifyError::Analyze(inner) => inner.into(),
            VerifyError::NotReversible { .. } => Self::NotReversible(e.to_string()),
            VerifyError::BadParams(_) => Self::Parse(e.to_string()),
        }
    }
}
