//! Solution repository: concrete solutions of patterns, their policies and
//! deployment requirements, and pairwise aggregation operators.

pub mod marker;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::requirements::{NfrKey, NfrMap};
use crate::text::normalize;

pub use store::{open_repository, write_repository};

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed repository at {path}: {reason}")]
    MalformedRepository { path: PathBuf, reason: String },
    #[error("marker `{marker}` appears more than once in solution `{solution}`")]
    MarkerCollision { solution: String, marker: String },
    #[error("operator `{operator}` references unknown solution `{solution}`")]
    DanglingOperatorEndpoint { operator: String, solution: String },
    #[error("unknown solution `{0}`")]
    UnknownSolution(String),
    #[error("more than one operator stored for `{from}` -> `{to}`")]
    AmbiguousOperator { from: String, to: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementKind {
    Runtime,
    Library,
    Service,
    QuantumBackend,
}

impl RequirementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequirementKind::Runtime => "runtime",
            RequirementKind::Library => "library",
            RequirementKind::Service => "service",
            RequirementKind::QuantumBackend => "quantum_backend",
        }
    }
}

impl fmt::Display for RequirementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementSpec {
    pub kind: RequirementKind,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version_constraint: Option<String>,
}

impl RequirementSpec {
    pub fn new(kind: RequirementKind, name: impl Into<String>, version: Option<&str>) -> Self {
        RequirementSpec { kind, name: name.into(), version_constraint: version.map(str::to_owned) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcreteSolution {
    pub id: String,
    pub pattern_id: String,
    #[serde(default)]
    pub policies: NfrMap,
    #[serde(default)]
    pub deployment_requirements: Vec<RequirementSpec>,
    #[serde(default)]
    pub markers: BTreeSet<String>,
    /// Command that runs the solution, relative to its artifact root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<Vec<String>>,
    /// Artifact files keyed by `/`-separated relative path.
    #[serde(skip)]
    pub artifact: BTreeMap<String, Vec<u8>>,
}

impl ConcreteSolution {
    pub fn new(id: impl Into<String>, pattern_id: impl Into<String>) -> Self {
        ConcreteSolution {
            id: id.into(),
            pattern_id: pattern_id.into(),
            policies: NfrMap::new(),
            deployment_requirements: Vec::new(),
            markers: BTreeSet::new(),
            entry: None,
            artifact: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionMode {
    ReplaceMarker,
    BeforeMarker,
    AfterMarker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionTarget {
    pub solution: String,
    pub file: String,
    pub marker: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentRef {
    pub solution: String,
    pub fragment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionDirective {
    pub into: InsertionTarget,
    pub insert: FragmentRef,
    pub mode: InsertionMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationOperator {
    pub id: String,
    pub source_solution: String,
    pub target_solution: String,
    #[serde(default)]
    pub script: Vec<InsertionDirective>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositoryManifest {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Read-only handle over an opened repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionRepository {
    pub manifest: RepositoryManifest,
    solutions: BTreeMap<String, ConcreteSolution>,
    /// Sorted by id.
    operators: Vec<AggregationOperator>,
}

impl SolutionRepository {
    /// Builds a repository and checks every invariant that `open_repository` checks.
    pub fn new(
        manifest: RepositoryManifest,
        solutions: Vec<ConcreteSolution>,
        mut operators: Vec<AggregationOperator>,
    ) -> Result<Self, RepoError> {
        let malformed = |reason: String| RepoError::MalformedRepository { path: PathBuf::new(), reason };
        let mut by_id = BTreeMap::new();
        for s in solutions {
            if s.id.trim().is_empty() {
                return Err(malformed("solution with empty id".into()));
            }
            let id = s.id.clone();
            if by_id.insert(id.clone(), s).is_some() {
                return Err(malformed(format!("duplicate solution id `{id}`")));
            }
        }
        operators.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = operators.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(malformed(format!("duplicate operator id `{}`", w[0].id)));
        }
        let repo = SolutionRepository { manifest, solutions: by_id, operators };
        repo.check()?;
        Ok(repo)
    }

    fn check(&self) -> Result<(), RepoError> {
        let malformed = |reason: String| RepoError::MalformedRepository { path: PathBuf::new(), reason };
        for s in self.solutions.values() {
            check_solution(s).map_err(|e| match e {
                RepoError::MalformedRepository { reason, .. } => malformed(reason),
                other => other,
            })?;
        }
        for op in &self.operators {
            self.check_operator(op)?;
        }
        Ok(())
    }

    fn check_operator(&self, op: &AggregationOperator) -> Result<(), RepoError> {
        let malformed = |reason: String| RepoError::MalformedRepository {
            path: PathBuf::new(),
            reason: format!("operator `{}`: {reason}", op.id),
        };
        for end in [&op.source_solution, &op.target_solution] {
            if !self.solutions.contains_key(end) {
                return Err(RepoError::DanglingOperatorEndpoint { operator: op.id.clone(), solution: end.clone() });
            }
        }
        if op.source_solution == op.target_solution {
            return Err(malformed("source and target are the same solution".into()));
        }
        for d in &op.script {
            // Fragments of the target are inserted into files of the source.
            if d.into.solution != op.source_solution || d.insert.solution != op.target_solution {
                return Err(malformed("directives must insert target fragments into source files".into()));
            }
            let into = &self.solutions[&d.into.solution];
            if !into.markers.contains(&d.into.marker) {
                return Err(malformed(format!("`{}` exposes no marker `{}`", into.id, d.into.marker)));
            }
            let Some(content) = into.artifact.get(&d.into.file) else {
                return Err(malformed(format!("`{}` has no file `{}`", into.id, d.into.file)));
            };
            if !marker::find_markers(content).iter().any(|h| h.name == d.into.marker) {
                return Err(malformed(format!("file `{}` has no marker `{}`", d.into.file, d.into.marker)));
            }
            if !self.solutions[&d.insert.solution].artifact.contains_key(&d.insert.fragment) {
                return Err(malformed(format!("fragment `{}` missing in `{}`", d.insert.fragment, d.insert.solution)));
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.manifest.id
    }

    pub fn solution(&self, id: &str) -> Option<&ConcreteSolution> {
        self.solutions.get(id)
    }

    /// All solutions, ordered by id.
    pub fn solutions(&self) -> impl Iterator<Item = &ConcreteSolution> {
        self.solutions.values()
    }

    pub fn operators(&self) -> &[AggregationOperator] {
        &self.operators
    }

    pub fn operator(&self, id: &str) -> Option<&AggregationOperator> {
        self.operators.iter().find(|o| o.id == id)
    }
}

/// Marker names declared by `s` must each occur on exactly one line of its
/// artifact, and no undeclared marker line may occur.
pub(crate) fn check_solution(s: &ConcreteSolution) -> Result<(), RepoError> {
    let malformed = |reason: String| RepoError::MalformedRepository {
        path: PathBuf::new(),
        reason: format!("solution `{}`: {reason}", s.id),
    };
    if s.pattern_id.trim().is_empty() {
        return Err(malformed("empty pattern_id".into()));
    }
    if let Some(r) = s.deployment_requirements.iter().find(|r| r.name.trim().is_empty()) {
        return Err(malformed(format!("{} requirement without a name", r.kind)));
    }
    if s.entry.as_ref().is_some_and(|e| e.is_empty()) {
        return Err(malformed("empty entry command".into()));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (path, content) in &s.artifact {
        if !is_relative_path(path) {
            return Err(malformed(format!("artifact path `{path}` leaves the artifact")));
        }
        for hit in marker::find_markers(content) {
            if !s.markers.contains(&hit.name) {
                return Err(malformed(format!("undeclared marker `{}` in `{path}`", hit.name)));
            }
            *counts.entry(hit.name).or_default() += 1;
        }
    }
    for m in &s.markers {
        match counts.get(m).copied().unwrap_or(0) {
            0 => return Err(malformed(format!("declared marker `{m}` does not occur in the artifact"))),
            1 => {}
            _ => return Err(RepoError::MarkerCollision { solution: s.id.clone(), marker: m.clone() }),
        }
    }
    Ok(())
}

pub(crate) fn is_relative_path(path: &str) -> bool {
    !path.is_empty() && !path.starts_with('/') && path.split('/').all(|c| !c.is_empty() && c != "." && c != "..")
}

/// All solutions implementing `pattern_id`, ordered by solution id.
pub fn query_solutions<'a>(repo: &'a SolutionRepository, pattern_id: &str) -> Vec<&'a ConcreteSolution> {
    repo.solutions.values().filter(|s| s.pattern_id == pattern_id).collect()
}

/// The operator stored for the ordered pair, if any. A solution is never
/// composed with itself.
pub fn query_operator<'a>(
    repo: &'a SolutionRepository,
    from: &str,
    to: &str,
) -> Result<Option<&'a AggregationOperator>, RepoError> {
    for id in [from, to] {
        if !repo.solutions.contains_key(id) {
            return Err(RepoError::UnknownSolution(id.to_owned()));
        }
    }
    if from == to {
        return Ok(None);
    }
    let mut found = repo.operators.iter().filter(|o| o.source_solution == from && o.target_solution == to);
    let first = found.next();
    if found.next().is_some() {
        return Err(RepoError::AmbiguousOperator { from: from.to_owned(), to: to.to_owned() });
    }
    Ok(first)
}

/// The constrained keys that `solution` fails. A solution with no policy for
/// a constrained key fails that key.
pub fn violations(solution: &ConcreteSolution, nfrs: &NfrMap) -> Vec<NfrKey> {
    nfrs.iter()
        .filter(|(key, wanted)| {
            let wanted = normalize(wanted);
            let ok = match key {
                NfrKey::ProviderExclusion => {
                    solution.policies.get(&NfrKey::Provider).is_some_and(|p| normalize(p) != wanted)
                }
                _ => solution.policies.get(key).is_some_and(|p| normalize(p) == wanted),
            };
            !ok
        })
        .map(|(k, _)| *k)
        .collect()
}

pub fn satisfies(solution: &ConcreteSolution, nfrs: &NfrMap) -> bool {
    violations(solution, nfrs).is_empty()
}
