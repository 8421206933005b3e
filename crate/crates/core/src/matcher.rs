//! Entry-point matching: TF-IDF vectors over pattern text, ranked by cosine
//! similarity against the keywords of one sub-problem.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern::{PatternLanguage, SectionKind};
use crate::requirements::{NfrKey, NfrMap, SubProblem};
use crate::text::{normalize, tokenize};

/// Used when neither the caller nor the language manifest sets a threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

pub const INDEXED_SECTIONS: [SectionKind; 4] =
    [SectionKind::Context, SectionKind::Problem, SectionKind::Solution, SectionKind::KnownUses];

/// Sparse non-negative vector keyed by vocabulary dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector(pub BTreeMap<usize, f64>);

impl SparseVector {
    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector(values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.0.len() <= other.0.len() { (self, other) } else { (other, self) };
        small.0.iter().filter_map(|(k, v)| large.0.get(k).map(|w| v * w)).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector(self.0.iter().map(|(k, v)| (*k, v * factor)).collect())
    }

    pub fn get(&self, dim: usize) -> f64 {
        self.0.get(&dim).copied().unwrap_or(0.0)
    }
}

/// Cosine similarity; zero when either vector is zero. Clamped to `[0, 1]`,
/// which is the full range for non-negative inputs.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternIndex {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: BTreeMap<String, f64>,
    pub vectors: BTreeMap<String, SparseVector>,
    pub section_kinds_indexed: Vec<SectionKind>,
    /// Complexity class per pattern, for the runtime NFR check.
    pub complexity: BTreeMap<String, String>,
}

impl PatternIndex {
    pub fn weight(&self, pattern: &str, term: &str) -> f64 {
        match (self.vectors.get(pattern), self.vocabulary.get(term)) {
            (Some(v), Some(&dim)) => v.get(dim),
            _ => 0.0,
        }
    }

    /// Query vector for a keyword list: each distinct known term weighted by its idf.
    pub fn query_vector<S: AsRef<str>>(&self, keywords: &[S]) -> SparseVector {
        let mut out = BTreeMap::new();
        for k in keywords {
            let k = k.as_ref();
            if let (Some(&dim), Some(&idf)) = (self.vocabulary.get(k), self.idf.get(k)) {
                out.insert(dim, idf);
            }
        }
        SparseVector(out)
    }
}

/// Builds the index with raw term frequency times the smoothed idf
/// `ln((1 + N) / (1 + df)) + 1`, L2-normalizing every pattern vector.
pub fn build_index(lang: &PatternLanguage) -> PatternIndex {
    let n = lang.len() as f64;
    let mut term_counts: Vec<(String, HashMap<String, usize>)> = Vec::new();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for p in lang.patterns() {
        let text: Vec<&str> = INDEXED_SECTIONS.iter().filter_map(|k| p.sections.get(*k)).collect();
        let mut counts = HashMap::new();
        for t in tokenize(&text.join(" ")) {
            *counts.entry(t).or_insert(0) += 1;
        }
        for t in counts.keys() {
            *df.entry(t.clone()).or_insert(0) += 1;
        }
        term_counts.push((p.id.clone(), counts));
    }

    let vocabulary: BTreeMap<String, usize> = df.keys().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let idf: BTreeMap<String, f64> =
        df.iter().map(|(t, d)| (t.clone(), ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)).collect();

    let mut vectors = BTreeMap::new();
    for (id, counts) in term_counts {
        let raw = SparseVector(counts.iter().map(|(t, c)| (vocabulary[t], *c as f64 * idf[t])).collect());
        let norm = raw.norm();
        let v = if norm > 0.0 { raw.scaled(1.0 / norm) } else { raw };
        vectors.insert(id, v);
    }
    let complexity = lang
        .patterns()
        .iter()
        .filter_map(|p| p.complexity_class.as_ref().map(|c| (p.id.clone(), c.clone())))
        .collect();
    PatternIndex { vocabulary, idf, vectors, section_kinds_indexed: INDEXED_SECTIONS.to_vec(), complexity }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryPointCandidate {
    pub pattern_id: String,
    pub score: f64,
    pub nfr_compatible: bool,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("no pattern matches sub-problem {subproblem} (threshold {threshold}); please provide additional details about the problem")]
pub struct NoEntryPointFound {
    pub subproblem: usize,
    pub threshold: f64,
}

/// Only the runtime class is checked at this stage; an absent constraint is
/// always compatible, a pattern without a declared class never is.
pub fn nfr_compatible(index: &PatternIndex, pattern_id: &str, nfrs: &NfrMap) -> bool {
    match nfrs.get(&NfrKey::MaxRuntimeClass) {
        None => true,
        Some(wanted) => index.complexity.get(pattern_id).is_some_and(|c| normalize(c) == normalize(wanted)),
    }
}

fn sort_and_rank(mut out: Vec<EntryPointCandidate>) -> Vec<EntryPointCandidate> {
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.pattern_id.cmp(&b.pattern_id)));
    for (i, c) in out.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    out
}

/// Every pattern scored against `query`, sorted, without any filtering.
pub fn score_query(index: &PatternIndex, query: &SparseVector, nfrs: &NfrMap) -> Vec<EntryPointCandidate> {
    sort_and_rank(
        index
            .vectors
            .iter()
            .map(|(id, v)| EntryPointCandidate {
                pattern_id: id.clone(),
                score: cosine(query, v),
                nfr_compatible: nfr_compatible(index, id, nfrs),
                rank: 0,
            })
            .collect(),
    )
}

pub fn rank_query(
    index: &PatternIndex,
    query: &SparseVector,
    nfrs: &NfrMap,
    threshold: f64,
) -> Vec<EntryPointCandidate> {
    sort_and_rank(
        score_query(index, query, nfrs).into_iter().filter(|c| c.score >= threshold && c.nfr_compatible).collect(),
    )
}

pub fn rank_entry_points(
    index: &PatternIndex,
    sub: &SubProblem,
    nfrs: &NfrMap,
    threshold: f64,
) -> Result<Vec<EntryPointCandidate>, NoEntryPointFound> {
    let ranked = rank_query(index, &index.query_vector(&sub.keywords), nfrs, threshold);
    if ranked.is_empty() {
        Err(NoEntryPointFound { subproblem: sub.index, threshold })
    } else {
        Ok(ranked)
    }
}
