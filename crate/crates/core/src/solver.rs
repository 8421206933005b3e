//! Solution graphs: the concrete solutions available for a pattern graph, the
//! operators connecting them, and the selection of one solution per pattern.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::PatternGraph;
use crate::repo::{query_operator, query_solutions, violations, RepoError, SolutionRepository};
use crate::requirements::{NfrKey, NfrMap};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SolutionNode {
    pub pattern: String,
    pub solution: String,
}

impl SolutionNode {
    pub fn new(pattern: impl Into<String>, solution: impl Into<String>) -> Self {
        SolutionNode { pattern: pattern.into(), solution: solution.into() }
    }
}

impl fmt::Display for SolutionNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.pattern, self.solution)
    }
}

/// Serialized as `"PENDING"`, `"REMOVED"` or the operator id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperatorState {
    Pending,
    Resolved(String),
    Removed,
}

impl OperatorState {
    pub fn resolved(&self) -> Option<&str> {
        match self {
            OperatorState::Resolved(id) => Some(id),
            _ => None,
        }
    }
}

impl Serialize for OperatorState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            OperatorState::Pending => s.serialize_str("PENDING"),
            OperatorState::Removed => s.serialize_str("REMOVED"),
            OperatorState::Resolved(id) => s.serialize_str(id),
        }
    }
}

impl<'de> Deserialize<'de> for OperatorState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "PENDING" => OperatorState::Pending,
            "REMOVED" => OperatorState::Removed,
            _ => OperatorState::Resolved(s),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SolutionEdge {
    pub from: SolutionNode,
    pub to: SolutionNode,
    pub operator: OperatorState,
}

/// A solution dropped by NFR filtering, kept for display.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredSolution {
    pub node: SolutionNode,
    pub violated: Vec<NfrKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionGraph {
    pub pattern_graph: PatternGraph,
    pub nodes: BTreeSet<SolutionNode>,
    /// Ordered by (from, to).
    pub edges: Vec<SolutionEdge>,
    /// Patterns of the pattern graph without any remaining solution.
    #[serde(default)]
    pub uncovered_patterns: BTreeSet<String>,
    #[serde(default)]
    pub filtered: Vec<FilteredSolution>,
}

impl SolutionGraph {
    pub fn solutions_of(&self, pattern: &str) -> Vec<&SolutionNode> {
        self.nodes.iter().filter(|n| n.pattern == pattern).collect()
    }

    pub fn edge(&self, from: &SolutionNode, to: &SolutionNode) -> Option<&SolutionEdge> {
        self.edges.iter().find(|e| e.from == *from && e.to == *to)
    }

    pub fn is_covered(&self) -> bool {
        self.uncovered_patterns.is_empty()
    }

    fn recheck_coverage(&mut self) {
        let covered: BTreeSet<&str> = self.nodes.iter().map(|n| n.pattern.as_str()).collect();
        self.uncovered_patterns =
            self.pattern_graph.nodes.iter().filter(|p| !covered.contains(p.as_str())).cloned().collect();
    }

    /// Fails with the uncovered patterns, if any.
    pub fn coverage(&self) -> Result<(), SolverError> {
        if self.is_covered() {
            Ok(())
        } else {
            Err(SolverError::NoSolutionForPattern(self.uncovered_patterns.iter().cloned().collect()))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("no concrete solution exists for pattern(s) {}", .0.join(", "))]
    NoSolutionForPattern(Vec<String>),
    #[error(transparent)]
    NoValidSelection(#[from] NoValidSelection),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error(
    "no valid combination of concrete solutions exists{}; please provide additional input such as relaxed non-functional requirements or an adapted pattern graph",
    uncovered_note(.uncovered_patterns)
)]
pub struct NoValidSelection {
    pub uncovered_patterns: Vec<String>,
}

fn uncovered_note(ids: &[String]) -> String {
    if ids.is_empty() {
        String::new()
    } else {
        format!(" (no solution left for {})", ids.join(", "))
    }
}

/// All solutions of every pattern, with a pending edge for every solution pair
/// whose patterns are connected.
pub fn compute_solution_graph(pgraph: &PatternGraph, repo: &SolutionRepository) -> SolutionGraph {
    let mut nodes = BTreeSet::new();
    for p in &pgraph.nodes {
        for s in query_solutions(repo, p) {
            nodes.insert(SolutionNode::new(p, &s.id));
        }
    }
    let pairs: BTreeSet<(&str, &str)> = pgraph.edges.iter().map(|e| (e.source.as_str(), e.target.as_str())).collect();
    let mut edges = Vec::new();
    for (src, dst) in pairs {
        for a in nodes.iter().filter(|n| n.pattern == src) {
            for b in nodes.iter().filter(|n| n.pattern == dst) {
                edges.push(SolutionEdge { from: a.clone(), to: b.clone(), operator: OperatorState::Pending });
            }
        }
    }
    edges.sort();
    let mut g = SolutionGraph {
        pattern_graph: pgraph.clone(),
        nodes,
        edges,
        uncovered_patterns: BTreeSet::new(),
        filtered: Vec::new(),
    };
    g.recheck_coverage();
    g
}

/// Drops solutions whose policies violate `nfrs`, together with their edges.
/// A node whose solution is not in `repo` fails every constraint.
pub fn filter_solutions(sgraph: &SolutionGraph, nfrs: &NfrMap, repo: &SolutionRepository) -> SolutionGraph {
    let mut out = sgraph.clone();
    for node in &sgraph.nodes {
        let violated = match repo.solution(&node.solution) {
            Some(s) => violations(s, nfrs),
            None => nfrs.keys().copied().collect(),
        };
        if !violated.is_empty() {
            out.nodes.remove(node);
            out.filtered.push(FilteredSolution { node: node.clone(), violated });
        }
    }
    out.edges.retain(|e| out.nodes.contains(&e.from) && out.nodes.contains(&e.to));
    out.recheck_coverage();
    out
}

/// Looks up the operator of every pending edge; edges without one become
/// `REMOVED`. Never adds edges.
pub fn resolve_operators(sgraph: &SolutionGraph, repo: &SolutionRepository) -> Result<SolutionGraph, RepoError> {
    let mut out = sgraph.clone();
    for e in &mut out.edges {
        if e.operator == OperatorState::Pending {
            e.operator = match query_operator(repo, &e.from.solution, &e.to.solution)? {
                Some(op) => OperatorState::Resolved(op.id.clone()),
                None => OperatorState::Removed,
            };
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorApplication {
    pub operator: String,
    pub from: SolutionNode,
    pub to: SolutionNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSelection {
    pub entry_point: String,
    /// pattern id -> solution id
    pub assignments: BTreeMap<String, String>,
    pub applications: Vec<OperatorApplication>,
}

impl SolutionSelection {
    pub fn node(&self, pattern: &str) -> Option<SolutionNode> {
        self.assignments.get(pattern).map(|s| SolutionNode::new(pattern, s))
    }

    pub fn entry_solution(&self) -> &str {
        &self.assignments[&self.entry_point]
    }
}

struct Search<'a> {
    order: Vec<String>,
    candidates: Vec<Vec<&'a str>>,
    /// For each position, the pattern pairs that become checkable once it is assigned.
    checks: Vec<Vec<(usize, usize)>>,
    resolved: BTreeMap<(&'a SolutionNode, &'a SolutionNode), &'a str>,
    nodes: &'a BTreeSet<SolutionNode>,
}

impl<'a> Search<'a> {
    fn has_operator(&self, pairs: (usize, usize), chosen: &[&str]) -> bool {
        let (s, t) = pairs;
        let from = self.nodes.get(&SolutionNode::new(&self.order[s], chosen[s]));
        let to = self.nodes.get(&SolutionNode::new(&self.order[t], chosen[t]));
        matches!((from, to), (Some(a), Some(b)) if self.resolved.contains_key(&(a, b)))
    }

    fn run(&self, depth: usize, chosen: &mut Vec<&'a str>) -> bool {
        if depth == self.order.len() {
            return true;
        }
        for &c in &self.candidates[depth] {
            chosen.push(c);
            if self.checks[depth].iter().all(|&p| self.has_operator(p, chosen)) && self.run(depth + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// First valid selection when patterns are assigned in breadth-first order
/// from the entry point and each pattern's solutions are tried in id order.
/// Valid means every pattern has a solution and every connected pattern pair
/// has a resolved operator between the chosen solutions.
pub fn find_valid_selection(sgraph: &SolutionGraph) -> Result<SolutionSelection, NoValidSelection> {
    let pg = &sgraph.pattern_graph;
    let order = pg.bfs_order();
    let position: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let candidates: Vec<Vec<&str>> =
        order.iter().map(|p| sgraph.solutions_of(p).into_iter().map(|n| n.solution.as_str()).collect()).collect();
    let uncovered: Vec<String> =
        order.iter().zip(&candidates).filter(|(_, c)| c.is_empty()).map(|(p, _)| p.clone()).collect();
    if !uncovered.is_empty() {
        return Err(NoValidSelection { uncovered_patterns: uncovered });
    }

    let pairs = pg.bfs_edge_order();
    let mut checks = vec![Vec::new(); order.len()];
    for (s, t) in &pairs {
        let (i, j) = (position[s.as_str()], position[t.as_str()]);
        checks[i.max(j)].push((i, j));
    }
    let resolved = sgraph
        .edges
        .iter()
        .filter_map(|e| e.operator.resolved().map(|op| ((&e.from, &e.to), op)))
        .collect();
    let search = Search { order, candidates, checks, resolved, nodes: &sgraph.nodes };

    let mut chosen = Vec::with_capacity(search.order.len());
    if !search.run(0, &mut chosen) {
        return Err(NoValidSelection { uncovered_patterns: Vec::new() });
    }
    let assignments: BTreeMap<String, String> =
        search.order.iter().cloned().zip(chosen.iter().map(|s| s.to_string())).collect();
    let applications = pairs
        .iter()
        .map(|(s, t)| {
            let from = SolutionNode::new(s, &assignments[s]);
            let to = SolutionNode::new(t, &assignments[t]);
            let operator = search.resolved[&(&from, &to)].to_owned();
            OperatorApplication { operator, from, to }
        })
        .collect();
    Ok(SolutionSelection { entry_point: pg.entry_point.clone(), assignments, applications })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphEdge, GraphOrigin};
    use crate::pattern::RelationKind;
    use crate::repo::{AggregationOperator, ConcreteSolution, RepositoryManifest};

    fn chain() -> PatternGraph {
        let mut g = PatternGraph::single("a", GraphOrigin::Generated);
        g.nodes.insert("b".into());
        g.nodes.insert("c".into());
        g.edges.insert(GraphEdge::new("a", "b", RelationKind::Requires));
        g.edges.insert(GraphEdge::new("b", "c", RelationKind::Requires));
        g
    }

    fn repo(ops: &[(&str, &str)]) -> SolutionRepository {
        let mut sols = Vec::new();
        for p in ["a", "b", "c"] {
            for flavor in ["x", "y"] {
                let mut s = ConcreteSolution::new(format!("{p}-{flavor}"), p);
                s.policies.insert(NfrKey::Provider, flavor.into());
                sols.push(s);
            }
        }
        let ops = ops
            .iter()
            .map(|(f, t)| AggregationOperator {
                id: format!("{f}-to-{t}"),
                source_solution: f.to_string(),
                target_solution: t.to_string(),
                script: vec![],
            })
            .collect();
        SolutionRepository::new(RepositoryManifest { id: "r".into(), description: None }, sols, ops).unwrap()
    }

    #[test]
    fn cross_product_edges() {
        let g = compute_solution_graph(&chain(), &repo(&[]));
        assert_eq!(g.nodes.len(), 6);
        assert_eq!(g.edges.len(), 8);
        assert!(g.edges.iter().all(|e| e.operator == OperatorState::Pending));
        assert!(g.is_covered());
    }

    #[test]
    fn filter_then_resolve() {
        let r = repo(&[("a-x", "b-x"), ("b-x", "c-x")]);
        let mut nfrs = NfrMap::new();
        nfrs.insert(NfrKey::Provider, "x".into());
        let g = filter_solutions(&compute_solution_graph(&chain(), &r), &nfrs, &r);
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.filtered.len(), 3);
        assert_eq!(filter_solutions(&g, &nfrs, &r), g);
        let g = resolve_operators(&g, &r).unwrap();
        let sel = find_valid_selection(&g).unwrap();
        assert_eq!(sel.assignments["c"], "c-x");
        let ops: Vec<_> = sel.applications.iter().map(|a| a.operator.as_str()).collect();
        assert_eq!(ops, vec!["a-x-to-b-x", "b-x-to-c-x"]);
    }

    #[test]
    fn backtracks_to_second_flavor() {
        let r = repo(&[("a-x", "b-x"), ("a-y", "b-y"), ("b-y", "c-y")]);
        let g = resolve_operators(&compute_solution_graph(&chain(), &r), &r).unwrap();
        let sel = find_valid_selection(&g).unwrap();
        assert_eq!(sel.assignments.values().collect::<Vec<_>>(), vec!["a-y", "b-y", "c-y"]);
    }

    #[test]
    fn coverage_gap_is_no_valid_selection() {
        let r = repo(&[]);
        let mut nfrs = NfrMap::new();
        nfrs.insert(NfrKey::Provider, "z".into());
        let g = filter_solutions(&compute_solution_graph(&chain(), &r), &nfrs, &r);
        assert_eq!(g.uncovered_patterns.len(), 3);
        assert!(matches!(g.coverage(), Err(SolverError::NoSolutionForPattern(p)) if p.len() == 3));
        let err = find_valid_selection(&g).unwrap_err();
        assert!(err.to_string().contains("additional input"));
    }

    #[test]
    fn single_pattern() {
        let r = repo(&[]);
        let g = compute_solution_graph(&PatternGraph::single("a", GraphOrigin::Generated), &r);
        assert!(g.edges.is_empty());
        let sel = find_valid_selection(&g).unwrap();
        assert_eq!(sel.entry_solution(), "a-x");
        assert!(sel.applications.is_empty());
    }

    #[test]
    fn operator_state_wire_form() {
        let states = [OperatorState::Pending, OperatorState::Removed, OperatorState::Resolved("op".into())];
        let v = serde_json::to_value(&states).unwrap();
        assert_eq!(v, serde_json::json!(["PENDING", "REMOVED", "op"]));
        let back: Vec<OperatorState> = serde_json::from_value(v).unwrap();
        assert_eq!(back, states);
    }
}
