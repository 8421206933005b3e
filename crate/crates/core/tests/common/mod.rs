//! Helpers shared by integration tests: sample data locations, random
//! generators and independent reference implementations.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use patternforge::graph::{GraphEdge, GraphOrigin, PatternGraph};
use patternforge::solver::{OperatorState, SolutionEdge, SolutionGraph, SolutionNode};
use patternforge::{Pattern, PatternLanguage, PatternRelation, RelationKind};
use rand::seq::SliceRandom;
use rand::Rng;

pub const CASE_STUDY: &str = "Given a set of variables and a boolean logic formula, I need to determine a variable \
assignment that satisfies the formula, if one exists. The resulting application should be executed using quantum \
computers from IBMQ";

pub fn data_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn golden_main() -> PathBuf {
    fixture("golden/case_study_main.py")
}

// ---------------------------------------------------------------------------
// selection oracle

/// Breadth-first pattern order over undirected edges, neighbors by id,
/// unreachable patterns last in id order.
pub fn reference_bfs(g: &PatternGraph) -> Vec<String> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in &g.edges {
        adj.entry(&e.source).or_default().insert(&e.target);
        adj.entry(&e.target).or_default().insert(&e.source);
    }
    let mut order = vec![g.entry_point.clone()];
    let mut seen: BTreeSet<String> = BTreeSet::from([g.entry_point.clone()]);
    let mut i = 0;
    while i < order.len() {
        let u = order[i].clone();
        if let Some(ns) = adj.get(u.as_str()) {
            for v in ns {
                if seen.insert(v.to_string()) {
                    order.push(v.to_string());
                }
            }
        }
        i += 1;
    }
    order.extend(g.nodes.iter().filter(|n| !seen.contains(*n)).cloned());
    order
}

/// First valid assignment found by enumerating every combination, the first
/// pattern in breadth-first order being the most significant digit.
pub fn brute_force_first(sg: &SolutionGraph) -> Option<BTreeMap<String, String>> {
    let order = reference_bfs(&sg.pattern_graph);
    let options: Vec<Vec<String>> = order
        .iter()
        .map(|p| {
            let mut v: Vec<String> = sg.nodes.iter().filter(|n| &n.pattern == p).map(|n| n.solution.clone()).collect();
            v.sort();
            v
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return None;
    }
    let resolved: BTreeSet<(SolutionNode, SolutionNode)> = sg
        .edges
        .iter()
        .filter(|e| matches!(e.operator, OperatorState::Resolved(_)))
        .map(|e| (e.from.clone(), e.to.clone()))
        .collect();
    let mut digits = vec![0usize; order.len()];
    loop {
        let pick: BTreeMap<String, String> =
            order.iter().zip(&digits).enumerate().map(|(i, (p, d))| (p.clone(), options[i][*d].clone())).collect();
        let valid = sg.pattern_graph.edges.iter().all(|e| {
            let from = SolutionNode::new(&e.source, &pick[&e.source]);
            let to = SolutionNode::new(&e.target, &pick[&e.target]);
            resolved.contains(&(from, to))
        });
        if valid {
            return Some(pick);
        }
        // odometer increment, last digit fastest
        let mut i = digits.len();
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// A connected pattern graph with up to `max_patterns` nodes and a solution
/// graph over it with up to three solutions per pattern. Each candidate edge
/// carries an operator with probability `p_operator`.
pub fn random_solution_graph<R: Rng>(rng: &mut R, max_patterns: usize, p_operator: f64) -> SolutionGraph {
    let n = rng.gen_range(1..=max_patterns);
    let mut ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    ids.shuffle(rng);
    let entry = ids[rng.gen_range(0..n)].clone();
    let mut pg = PatternGraph::single(&entry, GraphOrigin::Generated);
    pg.nodes.extend(ids.iter().cloned());
    let kinds = [RelationKind::Requires, RelationKind::RelatedTo, RelationKind::RefinedBy, RelationKind::AlternativeTo];
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = if rng.gen_bool(0.5) { (&ids[i], &ids[j]) } else { (&ids[j], &ids[i]) };
        pg.edges.insert(GraphEdge::new(a, b, *kinds.choose(rng).unwrap()));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let a = &ids[rng.gen_range(0..n)];
        let b = &ids[rng.gen_range(0..n)];
        if a != b {
            pg.edges.insert(GraphEdge::new(a, b, *kinds.choose(rng).unwrap()));
        }
    }

    let mut nodes = BTreeSet::new();
    for p in &ids {
        let count = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=3) };
        let mut labels = vec!["a", "b", "c", "d", "e"];
        labels.shuffle(rng);
        for l in labels.into_iter().take(count) {
            nodes.insert(SolutionNode::new(p, format!("{p}-{l}")));
        }
    }
    let pairs: BTreeSet<(String, String)> = pg.edges.iter().map(|e| (e.source.clone(), e.target.clone())).collect();
    let mut edges = Vec::new();
    for (s, t) in &pairs {
        for a in nodes.iter().filter(|x| &x.pattern == s) {
            for b in nodes.iter().filter(|x| &x.pattern == t) {
                let operator = if rng.gen_bool(p_operator) {
                    OperatorState::Resolved(format!("{}-to-{}", a.solution, b.solution))
                } else {
                    OperatorState::Removed
                };
                edges.push(SolutionEdge { from: a.clone(), to: b.clone(), operator });
            }
        }
    }
    edges.sort();
    let covered: BTreeSet<&str> = nodes.iter().map(|x| x.pattern.as_str()).collect();
    let uncovered_patterns = ids.iter().filter(|p| !covered.contains(p.as_str())).cloned().collect();
    SolutionGraph { pattern_graph: pg, nodes, edges, uncovered_patterns, filtered: Vec::new() }
}

// ---------------------------------------------------------------------------
// random pattern languages

const WORDS: [&str; 16] = [
    "quantum", "state", "search", "oracle", "circuit", "amplitude", "phase", "register", "measure", "classical",
    "optimize", "cluster", "kernel", "energy", "graph", "sample",
];

pub fn random_text<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

pub fn random_language<R: Rng>(rng: &mut R, max_patterns: usize) -> PatternLanguage {
    let n = rng.gen_range(1..=max_patterns);
    let ids: Vec<String> = (0..n).map(|i| format!("pat-{i}")).collect();
    let patterns = ids
        .iter()
        .map(|id| {
            let len = rng.gen_range(1..6);
            Pattern::new(id, id, &random_text(rng, len), &random_text(rng, len), &random_text(rng, len))
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut relations = Vec::new();
    for _ in 0..rng.gen_range(0..=2 * n) {
        let a = &ids[rng.gen_range(0..n)];
        let b = &ids[rng.gen_range(0..n)];
        let kind = *RelationKind::ALL.choose(rng).unwrap();
        let key = if kind.is_symmetric() && b < a { (b, a, kind) } else { (a, b, kind) };
        if a != b && seen.insert(key) {
            relations.push(PatternRelation::new(a.clone(), b.clone(), kind));
        }
    }
    PatternLanguage::new("random", patterns, relations).expect("generated language is valid")
}

/// Patterns reachable from `entry` within `depth` steps along `kinds`,
/// computed independently of the library.
pub fn reference_reachable(lang: &PatternLanguage, entry: &str, kinds: &[RelationKind], depth: usize) -> BTreeSet<String> {
    let mut dist: BTreeMap<String, usize> = BTreeMap::from([(entry.to_owned(), 0)]);
    let mut queue = VecDeque::from([entry.to_owned()]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == depth {
            continue;
        }
        for r in lang.relations().iter().filter(|r| kinds.contains(&r.kind)) {
            let next = if r.source == u {
                Some(&r.target)
            } else if r.kind == RelationKind::AlternativeTo && r.target == u {
                Some(&r.source)
            } else {
                None
            };
            if let Some(v) = next {
                if !dist.contains_key(v) {
                    dist.insert(v.clone(), d + 1);
                    queue.push_back(v.clone());
                }
            }
        }
    }
    dist.into_keys().collect()
}

// ---------------------------------------------------------------------------
// 3-SAT

pub fn parse_dimacs(text: &str) -> (usize, Vec<Vec<i64>>) {
    let mut vars = 0;
    let mut clauses = Vec::new();
    let mut current = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            vars = rest.split_whitespace().nth(1).unwrap().parse().unwrap();
            continue;
        }
        for lit in line.split_whitespace().map(|t| t.parse::<i64>().unwrap()) {
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    (vars, clauses)
}

/// Reads `x1=0 x2=1 ...` from the line starting with `assignment:`.
pub fn parse_assignment(stdout: &str) -> Option<Vec<bool>> {
    let line = stdout.lines().find_map(|l| l.strip_prefix("assignment:"))?;
    let mut values = BTreeMap::new();
    for tok in line.split_whitespace() {
        let (name, v) = tok.split_once('=')?;
        let idx: usize = name.strip_prefix('x')?.parse().ok()?;
        values.insert(idx, v == "1");
    }
    Some(values.into_values().collect())
}

pub fn satisfies_cnf(clauses: &[Vec<i64>], assignment: &[bool]) -> bool {
    clauses.iter().all(|c| {
        c.iter().any(|&lit| {
            let v = assignment.get(lit.unsigned_abs() as usize - 1).copied().unwrap_or(false);
            if lit > 0 {
                v
            } else {
                !v
            }
        })
    })
}
