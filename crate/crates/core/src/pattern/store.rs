//! On-disk layout of a pattern language:
//!
//! ```text
//! <root>/language.json        {id, patterns: [relative file paths], threshold?}
//! <root>/patterns/<id>.json   one document per pattern
//! <root>/relations.json       [{source, target, kind, description?}]
//! <root>/graphs/<ref>.json    optional expert-defined pattern graphs
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Pattern, PatternError, PatternLanguage, PatternRelation};
use crate::util::write_json;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LanguageManifest {
    id: String,
    patterns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PatternError> {
    let bytes = fs::read(path).map_err(|source| PatternError::Io { path: path.to_owned(), source })?;
    serde_json::from_slice(&bytes)
        .map_err(|e| PatternError::MalformedDocument { path: path.to_owned(), reason: e.to_string() })
}

pub fn load_pattern_language(root: impl AsRef<Path>) -> Result<PatternLanguage, PatternError> {
    let root = root.as_ref();
    let manifest: LanguageManifest = read_json(&root.join("language.json"))?;

    let mut patterns = Vec::with_capacity(manifest.patterns.len());
    for rel in &manifest.patterns {
        let path = root.join(rel);
        let pattern: Pattern = read_json(&path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if stem != pattern.id {
            return Err(PatternError::MalformedDocument {
                path,
                reason: format!("file name does not match pattern id `{}`", pattern.id),
            });
        }
        patterns.push(pattern);
    }

    let relations_path = root.join("relations.json");
    let relations: Vec<PatternRelation> = if relations_path.exists() { read_json(&relations_path)? } else { Vec::new() };

    let mut graphs = BTreeMap::new();
    let graphs_dir = root.join("graphs");
    if graphs_dir.is_dir() {
        let entries = fs::read_dir(&graphs_dir).map_err(|source| PatternError::Io { path: graphs_dir.clone(), source })?;
        for entry in entries {
            let path = entry.map_err(|source| PatternError::Io { path: graphs_dir.clone(), source })?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
                graphs.insert(name, read_json::<serde_json::Value>(&path)?);
            }
        }
    }

    let lang = PatternLanguage::from_parts_unchecked(manifest.id, patterns, relations)
        .with_threshold(manifest.threshold)
        .with_graphs(graphs);
    lang.check()?;
    Ok(lang)
}

/// Writes `lang` in the layout read by [`load_pattern_language`].
pub fn write_pattern_language(lang: &PatternLanguage, root: impl AsRef<Path>) -> Result<(), PatternError> {
    let root = root.as_ref();
    let io = |path: PathBuf| move |source| PatternError::Io { path, source };
    fs::create_dir_all(root.join("patterns")).map_err(io(root.join("patterns")))?;

    let manifest = LanguageManifest {
        id: lang.id().to_owned(),
        patterns: lang.patterns().iter().map(|p| format!("patterns/{}.json", p.id)).collect(),
        threshold: lang.threshold(),
    };
    write_json(&root.join("language.json"), &manifest).map_err(io(root.join("language.json")))?;
    for p in lang.patterns() {
        let path = root.join("patterns").join(format!("{}.json", p.id));
        write_json(&path, p).map_err(io(path.clone()))?;
    }
    write_json(&root.join("relations.json"), &lang.relations()).map_err(io(root.join("relations.json")))?;
    if !lang.graphs().is_empty() {
        fs::create_dir_all(root.join("graphs")).map_err(io(root.join("graphs")))?;
        for (name, doc) in lang.graphs() {
            let path = root.join("graphs").join(format!("{name}.json"));
            write_json(&path, doc).map_err(io(path.clone()))?;
        }
    }
    Ok(())
}
