use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use super::ComposeError;
use crate::repo::marker::{contains_sentinel, find_markers, SENTINEL};
use crate::repo::{query_operator, AggregationOperator, ConcreteSolution, InsertionDirective, InsertionMode, RepoError, SolutionRepository};
use crate::solver::SolutionSelection;
use crate::util::write_json;

pub const ORCHESTRATOR_FILE: &str = "orchestrate.py";
pub const PIPELINE_FILE: &str = "pipeline.json";
const ORCHESTRATOR_SOURCE: &str = include_str!("orchestrate.py");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub pattern: String,
    pub solution: String,
}

/// One applied operator, kept so a bundle can be rebuilt from the repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleStep {
    pub operator: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnresolvedMarker {
    pub file: String,
    pub marker: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct SpliceState {
    /// (solution, marker) -> bundle path currently holding the marker line
    live: BTreeMap<(String, String), String>,
    /// (path, marker) of lines used as anchors by before/after directives
    anchored: BTreeSet<(String, String)>,
    /// (solution, marker) already replaced
    replaced: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicationBundle {
    /// Content hash; empty until sealed.
    pub id: String,
    /// Command run from the bundle root.
    pub entry: Option<Vec<String>>,
    /// Solution whose files form the bundle root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    #[serde(default)]
    pub steps: Vec<BundleStep>,
    pub manifest: Vec<ManifestEntry>,
    /// Ids of the bundles run in sequence by a generated orchestrator.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<String>,
    pub unresolved_markers: Vec<UnresolvedMarker>,
    pub sealed: bool,
    #[serde(skip)]
    pub files: BTreeMap<String, Vec<u8>>,
    #[serde(skip)]
    splice: SpliceState,
}

impl ApplicationBundle {
    pub fn contains_solution(&self, id: &str) -> bool {
        self.manifest.iter().any(|m| m.solution == id)
    }

    /// Copies the artifact of `s` below `prefix`, skipping `skip`, and
    /// records where its markers now live.
    fn add_solution(&mut self, s: &ConcreteSolution, prefix: &str, skip: &BTreeSet<&str>) {
        for (rel, content) in &s.artifact {
            if skip.contains(rel.as_str()) {
                continue;
            }
            let path = format!("{prefix}{rel}");
            for hit in find_markers(content) {
                self.splice.live.insert((s.id.clone(), hit.name), path.clone());
            }
            self.files.insert(path, content.clone());
        }
        if !self.contains_solution(&s.id) {
            self.manifest.push(ManifestEntry { pattern: s.pattern_id.clone(), solution: s.id.clone() });
        }
    }

    fn splice(&mut self, d: &InsertionDirective, target: &ConcreteSolution) -> Result<(), ComposeError> {
        let key = (d.into.solution.clone(), d.into.marker.clone());
        let not_found = || ComposeError::MarkerNotFound { solution: key.0.clone(), marker: key.1.clone() };
        if self.splice.replaced.contains(&key) {
            return Err(ComposeError::Conflict {
                solution: key.0.clone(),
                marker: key.1.clone(),
                reason: "the marker was already replaced".into(),
            });
        }
        let path = self.splice.live.get(&key).cloned().ok_or_else(not_found)?;
        let content = self.files.get(&path).ok_or_else(not_found)?;
        let hits: Vec<_> = find_markers(content).into_iter().filter(|h| h.name == d.into.marker).collect();
        let line = match hits.as_slice() {
            [] => return Err(not_found()),
            [one] => one.line.clone(),
            _ => {
                return Err(ComposeError::Conflict {
                    solution: key.0.clone(),
                    marker: key.1.clone(),
                    reason: format!("`{path}` holds more than one line for this marker"),
                })
            }
        };
        let mut fragment = target.artifact.get(&d.insert.fragment).cloned().ok_or_else(|| {
            ComposeError::FragmentMissing { solution: target.id.clone(), fragment: d.insert.fragment.clone() }
        })?;
        if !fragment.is_empty() && !fragment.ends_with(b"\n") {
            fragment.push(b'\n');
        }

        let mut out = Vec::with_capacity(content.len() + fragment.len() + 1);
        match d.mode {
            InsertionMode::ReplaceMarker => {
                out.extend_from_slice(&content[..line.start]);
                out.extend_from_slice(&fragment);
                out.extend_from_slice(&content[line.end..]);
                self.splice.replaced.insert(key.clone());
            }
            InsertionMode::BeforeMarker => {
                out.extend_from_slice(&content[..line.start]);
                out.extend_from_slice(&fragment);
                out.extend_from_slice(&content[line.start..]);
                self.splice.anchored.insert((path.clone(), key.1.clone()));
            }
            InsertionMode::AfterMarker => {
                out.extend_from_slice(&content[..line.end]);
                if !out.ends_with(b"\n") {
                    out.push(b'\n');
                }
                out.extend_from_slice(&fragment);
                out.extend_from_slice(&content[line.end..]);
                self.splice.anchored.insert((path.clone(), key.1.clone()));
            }
        }
        for hit in find_markers(&fragment) {
            self.splice.live.insert((target.id.clone(), hit.name), path.clone());
        }
        self.files.insert(path, out);
        Ok(())
    }

    /// Marker lines that no directive has resolved.
    fn pending_markers(&self) -> Vec<UnresolvedMarker> {
        let mut out = Vec::new();
        for (path, content) in &self.files {
            for hit in find_markers(content) {
                if !self.splice.anchored.contains(&(path.clone(), hit.name.clone())) {
                    out.push(UnresolvedMarker { file: path.clone(), marker: hit.name });
                }
            }
        }
        out
    }

    fn refresh(&mut self) {
        self.unresolved_markers = self.pending_markers();
    }

    /// Bundle id derived from the entry command and the file tree.
    fn content_id(&self) -> String {
        let mut h = Sha256::new();
        for part in self.entry.iter().flatten() {
            h.update(part.as_bytes());
            h.update([0]);
        }
        h.update([1]);
        for (path, content) in &self.files {
            h.update(path.as_bytes());
            h.update([0]);
            h.update((content.len() as u64).to_le_bytes());
            h.update(content);
        }
        let digest = h.finalize();
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("bundle-{hex}")
    }
}

/// An unsealed bundle holding the artifact of `solution` at its root.
pub fn seed_bundle(solution: &ConcreteSolution) -> ApplicationBundle {
    let mut b = ApplicationBundle {
        id: String::new(),
        entry: solution.entry.clone(),
        seed: Some(solution.id.clone()),
        steps: Vec::new(),
        manifest: Vec::new(),
        stages: Vec::new(),
        unresolved_markers: Vec::new(),
        sealed: false,
        files: BTreeMap::new(),
        splice: SpliceState::default(),
    };
    b.add_solution(solution, "", &BTreeSet::new());
    b.refresh();
    b
}

/// Applies `op` to `work`. Endpoint solutions not yet in the bundle are added
/// below `solutions/<id>/`; fragments used by the script are not copied.
pub fn apply_operator(
    work: &ApplicationBundle,
    op: &AggregationOperator,
    repo: &SolutionRepository,
) -> Result<ApplicationBundle, ComposeError> {
    if work.sealed {
        return Err(ComposeError::AlreadySealed);
    }
    let lookup = |id: &str| repo.solution(id).ok_or_else(|| ComposeError::UnknownSolution(id.to_owned()));
    let source = lookup(&op.source_solution)?;
    let target = lookup(&op.target_solution)?;
    let mut out = work.clone();
    if !out.contains_solution(&source.id) {
        out.add_solution(source, &format!("solutions/{}/", source.id), &BTreeSet::new());
    }
    if !out.contains_solution(&target.id) {
        let fragments: BTreeSet<&str> = op.script.iter().map(|d| d.insert.fragment.as_str()).collect();
        out.add_solution(target, &format!("solutions/{}/", target.id), &fragments);
    }
    for d in &op.script {
        out.splice(d, target)?;
    }
    out.steps.push(BundleStep {
        operator: op.id.clone(),
        source: source.id.clone(),
        target: target.id.clone(),
    });
    out.refresh();
    Ok(out)
}

/// Strips anchor markers, fails if any other marker remains, and assigns the
/// content id.
pub fn seal(bundle: &ApplicationBundle) -> Result<ApplicationBundle, ComposeError> {
    if bundle.sealed {
        return Ok(bundle.clone());
    }
    let mut out = bundle.clone();
    let mut unresolved = bundle.pending_markers();
    for (path, content) in &mut out.files {
        for hit in find_markers(content).into_iter().rev() {
            if bundle.splice.anchored.contains(&(path.clone(), hit.name)) {
                content.drain(hit.line);
            }
        }
        if unresolved.is_empty() && contains_sentinel(content) {
            unresolved.push(UnresolvedMarker { file: path.clone(), marker: SENTINEL.to_owned() });
        }
    }
    if !unresolved.is_empty() {
        return Err(ComposeError::UnsealedBundle(unresolved));
    }
    out.splice = SpliceState::default();
    out.unresolved_markers.clear();
    out.sealed = true;
    out.id = out.content_id();
    Ok(out)
}

/// Seeds from the entry pattern's solution, applies the selection's
/// operators in order and seals the result.
pub fn aggregate(selection: &SolutionSelection, repo: &SolutionRepository) -> Result<ApplicationBundle, ComposeError> {
    let entry_id = selection
        .assignments
        .get(&selection.entry_point)
        .ok_or_else(|| ComposeError::UnknownSolution(format!("(no solution for `{}`)", selection.entry_point)))?;
    let entry = repo.solution(entry_id).ok_or_else(|| ComposeError::UnknownSolution(entry_id.clone()))?;
    let mut work = seed_bundle(entry);
    for app in &selection.applications {
        let op = repo.operator(&app.operator).ok_or_else(|| ComposeError::UnknownOperator(app.operator.clone()))?;
        if op.source_solution != app.from.solution || op.target_solution != app.to.solution {
            return Err(ComposeError::Conflict {
                solution: app.from.solution.clone(),
                marker: String::new(),
                reason: format!("operator `{}` does not connect `{}` and `{}`", op.id, app.from, app.to),
            });
        }
        work = apply_operator(&work, op, repo)?;
    }
    for solution in selection.assignments.values() {
        if !work.contains_solution(solution) {
            let s = repo.solution(solution).ok_or_else(|| ComposeError::UnknownSolution(solution.clone()))?;
            work.add_solution(s, &format!("solutions/{solution}/"), &BTreeSet::new());
            work.refresh();
        }
    }
    seal(&work)
}

fn rebuild(seed: &str, steps: &[&str], repo: &SolutionRepository) -> Result<ApplicationBundle, ComposeError> {
    let s = repo.solution(seed).ok_or_else(|| ComposeError::UnknownSolution(seed.to_owned()))?;
    let mut work = seed_bundle(s);
    for id in steps {
        let op = repo.operator(id).ok_or_else(|| ComposeError::UnknownOperator(id.to_string()))?;
        work = apply_operator(&work, op, repo)?;
    }
    Ok(work)
}

fn inter_bundle_operator<'a>(
    a: &ApplicationBundle,
    b: &ApplicationBundle,
    repo: &'a SolutionRepository,
) -> Result<Option<&'a AggregationOperator>, ComposeError> {
    let (Some(x), Some(y)) = (&a.seed, &b.seed) else {
        return Ok(None);
    };
    match query_operator(repo, x, y) {
        Ok(op) => Ok(op),
        Err(RepoError::UnknownSolution(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn orchestrate(units: &[ApplicationBundle]) -> Result<ApplicationBundle, ComposeError> {
    let mut files = BTreeMap::new();
    let mut stages = Vec::new();
    for (k, u) in units.iter().enumerate() {
        let Some(entry) = &u.entry else {
            return Err(ComposeError::IncompatibleBundles(format!(
                "bundle {k} declares no entry command and no operator connects it to its neighbor"
            )));
        };
        let dir = format!("stages/{k}");
        for (path, content) in &u.files {
            files.insert(format!("{dir}/{path}"), content.clone());
        }
        stages.push(serde_json::json!({"dir": dir, "entry": entry, "bundle": u.id}));
    }
    let pipeline = serde_json::json!({"version": 1, "stages": stages});
    files.insert(PIPELINE_FILE.to_owned(), crate::util::to_json_pretty(&pipeline).into_bytes());
    files.insert(ORCHESTRATOR_FILE.to_owned(), ORCHESTRATOR_SOURCE.as_bytes().to_vec());
    let combined = ApplicationBundle {
        id: String::new(),
        entry: Some(vec!["python3".into(), ORCHESTRATOR_FILE.into()]),
        seed: None,
        steps: Vec::new(),
        manifest: units.iter().flat_map(|u| u.manifest.iter().cloned()).collect(),
        stages: units.iter().map(|u| u.id.clone()).collect(),
        unresolved_markers: Vec::new(),
        sealed: false,
        files,
        splice: SpliceState::default(),
    };
    seal(&combined)
}

/// Combines per-sub-problem bundles in order. Neighbors connected by an
/// operator between their seed solutions are merged by replaying both recipes
/// around that operator; the remaining groups run in sequence through a
/// generated orchestrator.
pub fn combine_bundles(bundles: &[ApplicationBundle], repo: &SolutionRepository) -> Result<ApplicationBundle, ComposeError> {
    let (first, rest) = bundles
        .split_first()
        .ok_or_else(|| ComposeError::IncompatibleBundles("no bundles to combine".into()))?;
    let mut units = vec![first.clone()];
    for b in rest {
        let last = units.last().expect("non-empty");
        if let Some(op) = inter_bundle_operator(last, b, repo)? {
            let mut steps: Vec<&str> = last.steps.iter().map(|s| s.operator.as_str()).collect();
            steps.push(&op.id);
            steps.extend(b.steps.iter().map(|s| s.operator.as_str()));
            let merged = seal(&rebuild(last.seed.as_deref().expect("seeded"), &steps, repo)?)?;
            *units.last_mut().expect("non-empty") = merged;
        } else {
            units.push(b.clone());
        }
    }
    if units.len() == 1 {
        return Ok(units.pop().expect("one unit"));
    }
    orchestrate(&units)
}

/// Writes `<out>/bundle.json` and the file tree below `<out>/app/`.
pub fn write_bundle(bundle: &ApplicationBundle, out: &Path) -> Result<(), ComposeError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| ComposeError::Io { path, source }
    };
    let app = out.join("app");
    if app.exists() {
        fs::remove_dir_all(&app).map_err(io(&app))?;
    }
    for (rel, content) in &bundle.files {
        let path = app.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io(parent))?;
        }
        fs::write(&path, content).map_err(io(&path))?;
    }
    fs::create_dir_all(&app).map_err(io(&app))?;
    let meta = out.join("bundle.json");
    write_json(&meta, bundle).map_err(io(&meta))
}

pub fn read_bundle(out: &Path) -> Result<ApplicationBundle, ComposeError> {
    let meta = out.join("bundle.json");
    let bytes = fs::read(&meta).map_err(|source| ComposeError::Io { path: meta.clone(), source })?;
    let mut bundle: ApplicationBundle = serde_json::from_slice(&bytes)
        .map_err(|e| ComposeError::MalformedBundle { path: meta.clone(), reason: e.to_string() })?;
    let app = out.join("app");
    for entry in WalkDir::new(&app).sort_by_file_name() {
        let entry = entry.map_err(|e| ComposeError::MalformedBundle { path: app.clone(), reason: e.to_string() })?;
        if entry.file_type().is_file() {
            let rel = entry.path().strip_prefix(&app).expect("below app");
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            let content =
                fs::read(entry.path()).map_err(|source| ComposeError::Io { path: entry.path().to_owned(), source })?;
            bundle.files.insert(key, content);
        }
    }
    Ok(bundle)
}
