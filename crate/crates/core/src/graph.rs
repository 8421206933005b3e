//! Pattern graphs: the patterns selected for one problem, rooted at an entry point.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern::{PatternError, PatternLanguage, RelationKind};
use crate::validation::{ValidationReport, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("the entry point `{0}` cannot be removed")]
    EntryPointRemoval(String),
    #[error("edge `{from}` -> `{to}` needs both endpoints in the graph")]
    EdgeEndpointMissing { from: String, to: String },
    #[error("malformed graph document `{reference}`: {reason}")]
    MalformedGraphDocument { reference: String, reason: String },
}

impl From<PatternError> for GraphError {
    fn from(e: PatternError) -> Self {
        match e {
            PatternError::UnknownPattern(id) => GraphError::UnknownPattern(id),
            other => GraphError::MalformedGraphDocument { reference: String::new(), reason: other.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
}

impl GraphEdge {
    /// Symmetric kinds are stored with the smaller id first.
    pub fn new(source: impl Into<String>, target: impl Into<String>, kind: RelationKind) -> Self {
        let (mut source, mut target) = (source.into(), target.into());
        if kind.is_symmetric() && target < source {
            std::mem::swap(&mut source, &mut target);
        }
        GraphEdge { source, target, kind }
    }

    pub fn touches(&self, id: &str) -> bool {
        self.source == id || self.target == id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphOrigin {
    Generated,
    Predefined,
    Edited,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternGraph {
    pub entry_point: String,
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<GraphEdge>,
    pub origin: GraphOrigin,
}

impl PatternGraph {
    pub fn single(entry: impl Into<String>, origin: GraphOrigin) -> Self {
        let entry = entry.into();
        PatternGraph { nodes: BTreeSet::from([entry.clone()]), entry_point: entry, edges: BTreeSet::new(), origin }
    }

    /// Undirected adjacency with neighbors sorted by id.
    pub fn undirected_adjacency(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut adj: BTreeMap<&str, BTreeSet<&str>> = self.nodes.iter().map(|n| (n.as_str(), BTreeSet::new())).collect();
        for e in &self.edges {
            adj.entry(&e.source).or_default().insert(&e.target);
            adj.entry(&e.target).or_default().insert(&e.source);
        }
        adj
    }

    /// Breadth-first order of nodes from the entry point over undirected
    /// edges, neighbors visited in id order. Nodes not reachable from the
    /// entry point follow in id order.
    pub fn bfs_order(&self) -> Vec<String> {
        let adj = self.undirected_adjacency();
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        if self.nodes.contains(&self.entry_point) {
            seen.insert(self.entry_point.as_str());
            queue.push_back(self.entry_point.as_str());
        }
        while let Some(u) = queue.pop_front() {
            order.push(u.to_owned());
            for v in adj.get(u).into_iter().flatten() {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        for n in &self.nodes {
            if !seen.contains(n.as_str()) {
                order.push(n.clone());
            }
        }
        order
    }

    /// Distinct directed pattern pairs in breadth-first order: for each node
    /// in [`bfs_order`](Self::bfs_order), the pairs touching it that were not
    /// listed yet, sorted by the id of the other endpoint.
    pub fn bfs_edge_order(&self) -> Vec<(String, String)> {
        let pairs: BTreeSet<(&str, &str)> =
            self.edges.iter().map(|e| (e.source.as_str(), e.target.as_str())).collect();
        let mut listed = BTreeSet::new();
        let mut out = Vec::new();
        for u in self.bfs_order() {
            let mut local: Vec<(&str, (&str, &str))> = pairs
                .iter()
                .filter(|(s, t)| (*s == u || *t == u) && !listed.contains(&(*s, *t)))
                .map(|&(s, t)| (if s == u { t } else { s }, (s, t)))
                .collect();
            local.sort();
            for (_, pair) in local {
                listed.insert(pair);
                out.push((pair.0.to_owned(), pair.1.to_owned()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub follow_kinds: Vec<RelationKind>,
    pub max_depth: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { follow_kinds: vec![RelationKind::Requires], max_depth: 3 }
    }
}

/// Breadth-first expansion along the configured relation kinds. Edges between
/// already visited patterns are kept, so the result may contain cycles.
pub fn expand_pattern_graph(
    lang: &PatternLanguage,
    entry: &str,
    config: &ExpansionConfig,
) -> Result<PatternGraph, GraphError> {
    if !lang.contains(entry) {
        return Err(GraphError::UnknownPattern(entry.to_owned()));
    }
    let mut graph = PatternGraph::single(entry, GraphOrigin::Generated);
    let mut queue = VecDeque::from([(entry.to_owned(), 0usize)]);
    while let Some((id, depth)) = queue.pop_front() {
        if depth >= config.max_depth {
            continue;
        }
        for n in lang.neighbors(&id, &config.follow_kinds)? {
            graph.edges.insert(GraphEdge::new(&n.relation.source, &n.relation.target, n.relation.kind));
            if graph.nodes.insert(n.pattern.id.clone()) {
                queue.push_back((n.pattern.id.clone(), depth + 1));
            }
        }
    }
    Ok(graph)
}

/// The expert-defined graph attached to `entry`, if it has one.
pub fn load_predefined_graph(lang: &PatternLanguage, entry: &str) -> Result<Option<PatternGraph>, GraphError> {
    let pattern = lang.pattern(entry).ok_or_else(|| GraphError::UnknownPattern(entry.to_owned()))?;
    let Some(reference) = &pattern.predefined_graph_ref else {
        return Ok(None);
    };
    let malformed = |reason: String| GraphError::MalformedGraphDocument { reference: reference.clone(), reason };
    let doc = lang.graphs().get(reference).ok_or_else(|| malformed("no graph document with this name".into()))?;
    let mut graph: PatternGraph = serde_json::from_value(doc.clone()).map_err(|e| malformed(e.to_string()))?;
    if graph.entry_point != entry {
        return Err(malformed(format!("graph is rooted at `{}`, not `{entry}`", graph.entry_point)));
    }
    let report = validate_graph(&graph, lang);
    if !report.is_empty() {
        return Err(malformed(report.to_string()));
    }
    graph.origin = GraphOrigin::Predefined;
    Ok(Some(graph))
}

/// A user adaptation of a pattern graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "payload", rename_all = "snake_case")]
pub enum GraphEdit {
    AddPattern { id: String },
    RemovePattern { id: String },
    AddEdge { source: String, target: String, kind: RelationKind },
    RemoveEdge { source: String, target: String, kind: RelationKind },
}

pub fn apply_edit(graph: &PatternGraph, edit: &GraphEdit, lang: &PatternLanguage) -> Result<PatternGraph, GraphError> {
    let known = |id: &str| {
        if lang.contains(id) {
            Ok(())
        } else {
            Err(GraphError::UnknownPattern(id.to_owned()))
        }
    };
    let mut out = graph.clone();
    match edit {
        GraphEdit::AddPattern { id } => {
            known(id)?;
            out.nodes.insert(id.clone());
        }
        GraphEdit::RemovePattern { id } => {
            if *id == graph.entry_point {
                return Err(GraphError::EntryPointRemoval(id.clone()));
            }
            if !out.nodes.remove(id) {
                return Err(GraphError::UnknownPattern(id.clone()));
            }
            out.edges.retain(|e| !e.touches(id));
        }
        GraphEdit::AddEdge { source, target, kind } => {
            known(source)?;
            known(target)?;
            if source == target || !out.nodes.contains(source) || !out.nodes.contains(target) {
                return Err(GraphError::EdgeEndpointMissing { from: source.clone(), to: target.clone() });
            }
            out.edges.insert(GraphEdge::new(source, target, *kind));
        }
        GraphEdit::RemoveEdge { source, target, kind } => {
            known(source)?;
            known(target)?;
            out.edges.remove(&GraphEdge::new(source, target, *kind));
        }
    }
    out.origin = GraphOrigin::Edited;
    Ok(out)
}

/// Checks entry-point membership, edge closure, pattern existence and
/// undirected connectivity.
pub fn validate_graph(graph: &PatternGraph, lang: &PatternLanguage) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !graph.nodes.contains(&graph.entry_point) {
        report.push(Violation::EntryPointMissing { entry_point: graph.entry_point.clone() });
    }
    for e in &graph.edges {
        if !graph.nodes.contains(&e.source) || !graph.nodes.contains(&e.target) {
            report.push(Violation::EdgeEndpointMissing { source: e.source.clone(), target: e.target.clone() });
        }
    }
    for n in &graph.nodes {
        if !lang.contains(n) {
            report.push(Violation::UnknownPattern { id: n.clone() });
        }
    }
    let start = if graph.nodes.contains(&graph.entry_point) {
        Some(graph.entry_point.as_str())
    } else {
        graph.nodes.iter().next().map(String::as_str)
    };
    if let Some(start) = start {
        let adj = graph.undirected_adjacency();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in adj.get(u).into_iter().flatten() {
                if graph.nodes.contains(*v) && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        let unreachable: Vec<String> = graph.nodes.iter().filter(|n| !seen.contains(n.as_str())).cloned().collect();
        if !unreachable.is_empty() {
            report.push(Violation::Disconnected { unreachable });
        }
    }
    report
}
