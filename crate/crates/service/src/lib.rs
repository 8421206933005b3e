//! Pipeline sessions, the HTTP API and the command line front end.

pub mod cli;
pub mod http;
pub mod session;
pub mod store;

use std::path::{Path, PathBuf};

use patternforge::compose::ComposeError;
use patternforge::graph::{ExpansionConfig, GraphError};
use patternforge::matcher::{build_index, PatternIndex};
use patternforge::pattern::{load_pattern_language, PatternError};
use patternforge::repo::{open_repository, RepoError, SolutionRepository};
use patternforge::requirements::{ExtractError, ExtractorBinding};
use patternforge::{PatternLanguage, ValidationReport};
use thiserror::Error;

pub use session::{AdvanceInput, FailureKind, FailureReason, PipelineSession, SessionState};
pub use store::SessionStore;

pub const REPO_ENV: &str = "PF_REPO_DIR";
pub const LANGUAGE_ENV: &str = "PF_LANGUAGE_DIR";
pub const SESSION_ENV: &str = "PF_SESSION_DIR";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("session `{0}` not found")]
    SessionNotFound(String),
    #[error("cannot advance from `{state}`: {reason}")]
    InvalidTransition { state: SessionState, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sub-problem {0} does not exist")]
    UnknownSubproblem(usize),
    #[error("the graph of sub-problem {subproblem} is invalid: {report}")]
    InvalidGraph { subproblem: usize, report: ValidationReport },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error("malformed session file {path}: {reason}")]
    CorruptSession { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ServiceError::Io { path: path.to_owned(), source }
    }

    /// Stable snake_case name used in JSON error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::SessionNotFound(_) => "session_not_found",
            ServiceError::InvalidTransition { .. } => "invalid_transition",
            ServiceError::InvalidInput(_) => "invalid_input",
            ServiceError::UnknownSubproblem(_) => "unknown_subproblem",
            ServiceError::InvalidGraph { .. } => "invalid_graph",
            ServiceError::Graph(GraphError::EntryPointRemoval(_)) => "entry_point_removal",
            ServiceError::Graph(GraphError::UnknownPattern(_)) => "unknown_pattern",
            ServiceError::Graph(GraphError::EdgeEndpointMissing { .. }) => "edge_endpoint_missing",
            ServiceError::Graph(GraphError::MalformedGraphDocument { .. }) => "malformed_graph_document",
            ServiceError::Extract(ExtractError::EmptyDescription) => "empty_description",
            ServiceError::Extract(ExtractError::ExtractionFailed(_)) => "extraction_failed",
            ServiceError::Pattern(_) => "pattern_language_error",
            ServiceError::Repo(_) => "repository_error",
            ServiceError::Compose(ComposeError::ExecutionFailed { .. }) => "execution_failed",
            ServiceError::Compose(ComposeError::Timeout { .. }) => "timeout",
            ServiceError::Compose(_) => "composition_error",
            ServiceError::CorruptSession { .. } => "corrupt_session",
            ServiceError::Io { .. } => "io_error",
        }
    }
}

/// Everything the pipeline phases read: the pattern language with its index,
/// the solution repository and the extractor binding.
#[derive(Debug)]
pub struct Engine {
    pub language: PatternLanguage,
    pub index: PatternIndex,
    pub repo: SolutionRepository,
    pub extractor: ExtractorBinding,
    pub expansion: ExpansionConfig,
}

impl Engine {
    pub fn new(language: PatternLanguage, repo: SolutionRepository) -> Self {
        let index = build_index(&language);
        Engine { language, index, repo, extractor: ExtractorBinding::default(), expansion: ExpansionConfig::default() }
    }

    pub fn open(language_dir: &Path, repo_dir: &Path) -> Result<Self, ServiceError> {
        Ok(Engine::new(load_pattern_language(language_dir)?, open_repository(repo_dir)?))
    }

    pub fn with_extractor(mut self, extractor: ExtractorBinding) -> Self {
        self.extractor = extractor;
        self
    }
}
