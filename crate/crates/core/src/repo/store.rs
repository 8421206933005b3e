//! On-disk layout of a solution repository:
//!
//! ```text
//! <root>/repository.json                 {id, description?}
//! <root>/solutions/<id>/solution.json    solution metadata
//! <root>/solutions/<id>/artifact/...     artifact file tree
//! <root>/operators/<id>.json             aggregation operators
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use walkdir::WalkDir;

use super::{AggregationOperator, ConcreteSolution, RepoError, RepositoryManifest, SolutionRepository};
use crate::util::write_json;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RepoError + '_ {
    move |source| RepoError::Io { path: path.to_owned(), source }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, RepoError> {
    let bytes = fs::read(path).map_err(io(path))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| RepoError::MalformedRepository { path: path.to_owned(), reason: e.to_string() })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, RepoError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io(dir))? {
        out.push(entry.map_err(io(dir))?.path());
    }
    out.sort();
    Ok(out)
}

fn read_artifact(dir: &Path) -> Result<std::collections::BTreeMap<String, Vec<u8>>, RepoError> {
    let mut files = std::collections::BTreeMap::new();
    if !dir.is_dir() {
        return Ok(files);
    }
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| RepoError::MalformedRepository { path: dir.to_owned(), reason: e.to_string() })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).expect("walk stays below its root");
        let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        files.insert(key, fs::read(entry.path()).map_err(io(entry.path()))?);
    }
    Ok(files)
}

pub fn open_repository(root: impl AsRef<Path>) -> Result<SolutionRepository, RepoError> {
    let root = root.as_ref();
    let manifest: RepositoryManifest = read_json(&root.join("repository.json"))?;

    let mut solutions = Vec::new();
    for dir in sorted_entries(&root.join("solutions"))? {
        if !dir.is_dir() {
            continue;
        }
        let meta = dir.join("solution.json");
        let mut solution: ConcreteSolution = read_json(&meta)?;
        if dir.file_name().and_then(|n| n.to_str()) != Some(solution.id.as_str()) {
            return Err(RepoError::MalformedRepository {
                path: dir,
                reason: format!("directory name does not match solution id `{}`", solution.id),
            });
        }
        solution.artifact = read_artifact(&dir.join("artifact"))?;
        solutions.push(solution);
    }

    let mut operators = Vec::new();
    for path in sorted_entries(&root.join("operators"))? {
        if path.extension().is_some_and(|e| e == "json") {
            let op: AggregationOperator = read_json(&path)?;
            operators.push(op);
        }
    }

    SolutionRepository::new(manifest, solutions, operators).map_err(|e| match e {
        RepoError::MalformedRepository { path, reason } if path.as_os_str().is_empty() => {
            RepoError::MalformedRepository { path: root.to_owned(), reason }
        }
        other => other,
    })
}

/// Writes `repo` in the layout read by [`open_repository`].
pub fn write_repository(repo: &SolutionRepository, root: impl AsRef<Path>) -> Result<(), RepoError> {
    let root = root.as_ref();
    let path = root.join("repository.json");
    write_json(&path, &repo.manifest).map_err(io(&path))?;
    for s in repo.solutions() {
        let dir = root.join("solutions").join(&s.id);
        let meta = dir.join("solution.json");
        write_json(&meta, s).map_err(io(&meta))?;
        fs::create_dir_all(dir.join("artifact")).map_err(io(&dir))?;
        for (rel, content) in &s.artifact {
            let file = dir.join("artifact").join(rel);
            if let Some(parent) = file.parent() {
                fs::create_dir_all(parent).map_err(io(parent))?;
            }
            fs::write(&file, content).map_err(io(&file))?;
        }
    }
    fs::create_dir_all(root.join("operators")).map_err(io(root))?;
    for op in repo.operators() {
        let path = root.join("operators").join(format!("{}.json", op.id));
        write_json(&path, op).map_err(io(&path))?;
    }
    Ok(())
}
