mod common;

use std::collections::BTreeMap;
use std::time::Duration;

use patternforge::compose::{
    aggregate, combine_bundles, contributing_solutions, generate_deployment_model, read_bundle, run_local,
    write_bundle, ApplicationBundle, ComposeError, NodeKind, RunConfig, ORCHESTRATOR_FILE, PIPELINE_FILE,
};
use patternforge::repo::{open_repository, write_repository, AggregationOperator, SolutionRepository};
use patternforge::solver::SolutionSelection;
use patternforge::NfrMap;

fn repo() -> SolutionRepository {
    open_repository(common::fixture("two-stage-repo")).unwrap()
}

fn single(repo: &SolutionRepository, pattern: &str, solution: &str) -> ApplicationBundle {
    let selection = SolutionSelection {
        entry_point: pattern.into(),
        assignments: BTreeMap::from([(pattern.to_owned(), solution.to_owned())]),
        applications: vec![],
    };
    aggregate(&selection, repo).unwrap()
}

fn run(b: &ApplicationBundle) -> String {
    let cfg = RunConfig { allow_execution: true, timeout: Duration::from_secs(30), ..RunConfig::default() };
    run_local(b, &cfg).unwrap().stdout
}

#[test]
fn single_bundle_is_identity() {
    let r = repo();
    let b = single(&r, "quantum-clustering", "cluster-local");
    assert_eq!(combine_bundles(std::slice::from_ref(&b), &r).unwrap(), b);
}

#[test]
fn empty_list_is_rejected() {
    assert!(matches!(combine_bundles(&[], &repo()), Err(ComposeError::IncompatibleBundles(_))));
}

#[test]
fn orchestrator_runs_cluster_then_classify() {
    let r = repo();
    let cluster = single(&r, "quantum-clustering", "cluster-local");
    let classify = single(&r, "quantum-kernel-estimator", "classify-local");
    let combined = combine_bundles(&[cluster.clone(), classify.clone()], &r).unwrap();

    assert_eq!(combined.entry, Some(vec!["python3".to_owned(), ORCHESTRATOR_FILE.to_owned()]));
    assert_eq!(combined.stages, vec![cluster.id.clone(), classify.id.clone()]);
    assert!(combined.files.contains_key("stages/0/cluster.py"));
    assert!(combined.files.contains_key("stages/1/classify.py"));
    let pipeline: serde_json::Value = serde_json::from_slice(&combined.files[PIPELINE_FILE]).unwrap();
    assert_eq!(pipeline["stages"][0]["entry"], serde_json::json!(["python3", "cluster.py"]));
    let solutions: Vec<_> = combined.manifest.iter().map(|m| m.solution.as_str()).collect();
    assert_eq!(solutions, vec!["cluster-local", "classify-local"]);

    assert_eq!(run(&combined).trim(), "classified 0.8 as cluster 1");

    let model = generate_deployment_model(&combined, &contributing_solutions(&combined, &r).unwrap(), &NfrMap::new());
    // both stages need the same runtime
    assert_eq!(model.nodes_of(NodeKind::Runtime).count(), 1);
}

#[test]
fn missing_entry_command_is_incompatible() {
    let r = repo();
    let cluster = single(&r, "quantum-clustering", "cluster-local");
    let nocmd = single(&r, "quantum-kernel-estimator", "classify-nocmd");
    assert!(matches!(combine_bundles(&[cluster, nocmd], &r), Err(ComposeError::IncompatibleBundles(_))));
}

#[test]
fn inter_bundle_operator_merges_without_orchestrator() {
    let base = repo();
    let dir = tempfile::tempdir().unwrap();
    write_repository(&base, dir.path()).unwrap();
    let op = AggregationOperator {
        id: "cluster-local-to-classify-local".into(),
        source_solution: "cluster-local".into(),
        target_solution: "classify-local".into(),
        script: vec![],
    };
    patternforge::util::write_json(&dir.path().join("operators/cluster-local-to-classify-local.json"), &op).unwrap();
    let r = open_repository(dir.path()).unwrap();

    let cluster = single(&r, "quantum-clustering", "cluster-local");
    let classify = single(&r, "quantum-kernel-estimator", "classify-local");
    let combined = combine_bundles(&[cluster.clone(), classify], &r).unwrap();
    assert!(combined.stages.is_empty());
    assert_eq!(combined.entry, cluster.entry);
    assert!(combined.files.contains_key("cluster.py"));
    assert!(combined.files.contains_key("solutions/classify-local/classify.py"));
    assert_eq!(combined.steps.len(), 1);
    assert!(combined.sealed);
}

#[test]
fn bundle_round_trips_through_disk() {
    let r = repo();
    let combined = combine_bundles(
        &[single(&r, "quantum-clustering", "cluster-local"), single(&r, "quantum-kernel-estimator", "classify-local")],
        &r,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&combined, dir.path()).unwrap();
    assert!(dir.path().join("app").join(ORCHESTRATOR_FILE).is_file());
    assert_eq!(read_bundle(dir.path()).unwrap(), combined);
}
