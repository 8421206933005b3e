//! Pattern languages: pattern documents connected by typed, directed relations.
//!
//! A [`PatternLanguage`] is an immutable value once constructed. Every later
//! phase (entry matching, graph expansion, solution lookup) reads from it.

mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::validation::{ValidationReport, Violation};

pub use store::{load_pattern_language, write_pattern_language};

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document {path}: {reason}")]
    MalformedDocument { path: PathBuf, reason: String },
    #[error("relation `{from}` -> `{to}` references an unknown pattern")]
    DanglingRelation { from: String, to: String },
    #[error("duplicate pattern id `{0}`")]
    DuplicatePatternId(String),
    #[error("invalid pattern language: {0}")]
    InvalidLanguage(ValidationReport),
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Context,
    Problem,
    Forces,
    Solution,
    Consequences,
    KnownUses,
}

impl SectionKind {
    pub const REQUIRED: [SectionKind; 3] = [SectionKind::Context, SectionKind::Problem, SectionKind::Solution];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionKind::Context => "context",
            SectionKind::Problem => "problem",
            SectionKind::Forces => "forces",
            SectionKind::Solution => "solution",
            SectionKind::Consequences => "consequences",
            SectionKind::KnownUses => "known_uses",
        }
    }
}

/// The textual sections of a pattern document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sections {
    pub context: String,
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forces: Option<String>,
    pub solution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consequences: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_uses: Option<String>,
}

impl Sections {
    pub fn get(&self, kind: SectionKind) -> Option<&str> {
        match kind {
            SectionKind::Context => Some(&self.context),
            SectionKind::Problem => Some(&self.problem),
            SectionKind::Forces => self.forces.as_deref(),
            SectionKind::Solution => Some(&self.solution),
            SectionKind::Consequences => self.consequences.as_deref(),
            SectionKind::KnownUses => self.known_uses.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    pub id: String,
    pub name: String,
    pub sections: Sections,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predefined_graph_ref: Option<String>,
}

impl Pattern {
    /// Minimal pattern with the three required sections filled.
    pub fn new(id: impl Into<String>, name: impl Into<String>, context: &str, problem: &str, solution: &str) -> Self {
        Pattern {
            id: id.into(),
            name: name.into(),
            sections: Sections {
                context: context.to_owned(),
                problem: problem.to_owned(),
                solution: solution.to_owned(),
                ..Sections::default()
            },
            tags: BTreeSet::new(),
            complexity_class: None,
            predefined_graph_ref: None,
        }
    }
}

/// Relation vocabulary. Variants are declared in lexicographic order of their
/// wire names so that the derived ordering matches string ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    AlternativeTo,
    RefinedBy,
    RelatedTo,
    Requires,
}

impl RelationKind {
    pub const ALL: [RelationKind; 4] =
        [RelationKind::AlternativeTo, RelationKind::RefinedBy, RelationKind::RelatedTo, RelationKind::Requires];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::AlternativeTo => "alternative_to",
            RelationKind::RefinedBy => "refined_by",
            RelationKind::RelatedTo => "related_to",
            RelationKind::Requires => "requires",
        }
    }

    pub fn is_symmetric(self) -> bool {
        self == RelationKind::AlternativeTo
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown relation kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternRelation {
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl PatternRelation {
    pub fn new(source: impl Into<String>, target: impl Into<String>, kind: RelationKind) -> Self {
        PatternRelation { source: source.into(), target: target.into(), kind, description: None }
    }

    /// Key under which duplicates are detected; symmetric kinds ignore direction.
    fn identity(&self) -> (String, String, RelationKind) {
        if self.kind.is_symmetric() && self.target < self.source {
            (self.target.clone(), self.source.clone(), self.kind)
        } else {
            (self.source.clone(), self.target.clone(), self.kind)
        }
    }
}

/// A relation as seen from one pattern, together with the pattern at the other end.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor<'a> {
    pub relation: PatternRelation,
    pub pattern: &'a Pattern,
}

#[derive(Debug, Clone)]
pub struct PatternLanguage {
    id: String,
    patterns: Vec<Pattern>,
    relations: Vec<PatternRelation>,
    threshold: Option<f64>,
    graphs: BTreeMap<String, serde_json::Value>,
    by_id: HashMap<String, usize>,
}

impl PartialEq for PatternLanguage {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.patterns == other.patterns
            && self.relations == other.relations
            && self.threshold == other.threshold
            && self.graphs == other.graphs
    }
}

impl PatternLanguage {
    /// Builds a language and rejects it if any invariant is violated.
    pub fn new(id: impl Into<String>, patterns: Vec<Pattern>, relations: Vec<PatternRelation>) -> Result<Self, PatternError> {
        let lang = Self::from_parts_unchecked(id, patterns, relations);
        lang.check()?;
        Ok(lang)
    }

    /// Builds a language without checking invariants. Lookups resolve to the
    /// first pattern carrying a given id.
    pub fn from_parts_unchecked(
        id: impl Into<String>,
        patterns: Vec<Pattern>,
        relations: Vec<PatternRelation>,
    ) -> Self {
        let mut by_id = HashMap::new();
        for (i, p) in patterns.iter().enumerate() {
            by_id.entry(p.id.clone()).or_insert(i);
        }
        PatternLanguage { id: id.into(), patterns, relations, threshold: None, graphs: BTreeMap::new(), by_id }
    }

    pub fn with_threshold(mut self, threshold: Option<f64>) -> Self {
        self.threshold = threshold;
        self
    }

    /// Attaches expert-defined graph documents, keyed by the reference used in
    /// [`Pattern::predefined_graph_ref`].
    pub fn with_graphs(mut self, graphs: BTreeMap<String, serde_json::Value>) -> Self {
        self.graphs = graphs;
        self
    }

    pub(crate) fn check(&self) -> Result<(), PatternError> {
        let report = validate_language(self);
        if let Some(first) = report.entries.first() {
            return Err(match first {
                Violation::DuplicatePatternId { id } => PatternError::DuplicatePatternId(id.clone()),
                Violation::DanglingRelation { source, target } => {
                    PatternError::DanglingRelation { from: source.clone(), to: target.clone() }
                }
                _ => PatternError::InvalidLanguage(report),
            });
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn relations(&self) -> &[PatternRelation] {
        &self.relations
    }

    /// Minimum similarity configured for this language, if any.
    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn graphs(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.graphs
    }

    pub fn pattern(&self, id: &str) -> Option<&Pattern> {
        self.by_id.get(id).map(|&i| &self.patterns[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Relations leaving `id` whose kind is in `kinds`, plus mirrored
    /// `alternative_to` relations arriving at `id`. Ordered by kind, then
    /// target id.
    pub fn neighbors(&self, id: &str, kinds: &[RelationKind]) -> Result<Vec<Neighbor<'_>>, PatternError> {
        if !self.contains(id) {
            return Err(PatternError::UnknownPattern(id.to_owned()));
        }
        let mut seen = HashSet::new();
        let mut out: Vec<Neighbor<'_>> = Vec::new();
        for rel in self.relations.iter().filter(|r| kinds.contains(&r.kind)) {
            let oriented = if rel.source == id {
                rel.clone()
            } else if rel.kind.is_symmetric() && rel.target == id {
                PatternRelation {
                    source: rel.target.clone(),
                    target: rel.source.clone(),
                    kind: rel.kind,
                    description: rel.description.clone(),
                }
            } else {
                continue;
            };
            let Some(pattern) = self.pattern(&oriented.target) else {
                continue;
            };
            if seen.insert((oriented.kind, oriented.target.clone())) {
                out.push(Neighbor { relation: oriented, pattern });
            }
        }
        out.sort_by(|a, b| (a.relation.kind, &a.relation.target).cmp(&(b.relation.kind, &b.relation.target)));
        Ok(out)
    }
}

/// Checks every pattern-language invariant and lists each violation.
pub fn validate_language(lang: &PatternLanguage) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids = HashSet::new();
    for p in &lang.patterns {
        if p.id.trim().is_empty() {
            report.push(Violation::EmptyPatternId);
        } else if !ids.insert(p.id.as_str()) {
            report.push(Violation::DuplicatePatternId { id: p.id.clone() });
        }
        for kind in SectionKind::REQUIRED {
            if p.sections.get(kind).is_none_or(|t| t.trim().is_empty()) {
                report.push(Violation::MissingSection { pattern: p.id.clone(), section: kind.as_str().to_owned() });
            }
        }
    }
    let mut triples = HashSet::new();
    for r in &lang.relations {
        if r.source == r.target {
            report.push(Violation::SelfRelation { pattern: r.source.clone(), relation: r.kind });
        }
        if !lang.contains(&r.source) || !lang.contains(&r.target) {
            report.push(Violation::DanglingRelation { source: r.source.clone(), target: r.target.clone() });
        }
        if !triples.insert(r.identity()) {
            report.push(Violation::DuplicateRelation {
                source: r.source.clone(),
                target: r.target.clone(),
                relation: r.kind,
            });
        }
    }
    report
}
