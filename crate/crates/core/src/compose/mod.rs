//! Aggregation of selected concrete solutions into an application bundle,
//! deployment model generation and local execution.

mod bundle;
mod deploy;
mod exec;

use std::path::PathBuf;

use thiserror::Error;

pub use bundle::{
    aggregate, apply_operator, combine_bundles, read_bundle, seal, seed_bundle, write_bundle, ApplicationBundle,
    BundleStep, ManifestEntry, UnresolvedMarker, ORCHESTRATOR_FILE, PIPELINE_FILE,
};
pub use deploy::{
    contributing_solutions, generate_deployment_model, DeploymentModel, DeploymentNode, DeploymentRelation, NodeKind,
    RelationType, DEPLOYMENT_MODEL_VERSION,
};
pub use exec::{run_local, ExecutionReport, RunConfig};

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("marker `{marker}` of solution `{solution}` not found in the bundle")]
    MarkerNotFound { solution: String, marker: String },
    #[error("fragment `{fragment}` missing in solution `{solution}`")]
    FragmentMissing { solution: String, fragment: String },
    #[error("conflicting directives on marker `{marker}` of `{solution}`: {reason}")]
    Conflict { solution: String, marker: String, reason: String },
    #[error("bundle still contains unresolved markers: {}", list_markers(.0))]
    UnsealedBundle(Vec<UnresolvedMarker>),
    #[error("bundles cannot be combined: {0}")]
    IncompatibleBundles(String),
    #[error("unknown solution `{0}`")]
    UnknownSolution(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("the bundle is sealed and cannot be modified")]
    AlreadySealed,
    #[error("repository error: {0}")]
    Repo(#[from] crate::repo::RepoError),
    #[error("malformed bundle at {path}: {reason}")]
    MalformedBundle { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("execution failed: {reason}")]
    ExecutionFailed { reason: String, report: Option<Box<ExecutionReport>> },
    #[error("execution timed out after {seconds:.1} s")]
    Timeout { seconds: f64, report: Option<Box<ExecutionReport>> },
}

fn list_markers(markers: &[UnresolvedMarker]) -> String {
    markers.iter().map(|m| format!("{} in {}", m.marker, m.file)).collect::<Vec<_>>().join(", ")
}
