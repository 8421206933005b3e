#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;

use patternforge::graph::GraphEdit;
use patternforge::{NfrKey, NfrMap};
use patternforge_service::session::{advance_once, BUNDLE_DIR, DEPLOYMENT_FILE};
use patternforge_service::{
    AdvanceInput, Engine, FailureKind, PipelineSession, ServiceError, SessionState, SessionStore,
};

fn engine() -> Engine {
    Engine::open(&common::data_dir("quantum-patterns"), &common::data_dir("quantum-solutions")).unwrap()
}

const ORDER: [SessionState; 9] = [
    SessionState::Created,
    SessionState::RequirementsReady,
    SessionState::EntryMatched,
    SessionState::GraphProposed,
    SessionState::GraphConfirmed,
    SessionState::SolutionsComputed,
    SessionState::SelectionReady,
    SessionState::Aggregated,
    SessionState::DeployedModelReady,
];

fn input_for(state: SessionState) -> AdvanceInput {
    match state {
        SessionState::GraphProposed => AdvanceInput::confirm(),
        _ => AdvanceInput::default(),
    }
}

/// Everything except the id, which differs between runs.
fn comparable(s: &PipelineSession) -> serde_json::Value {
    let mut v = serde_json::to_value(s).unwrap();
    v.as_object_mut().unwrap().remove("id");
    v
}

#[test]
fn states_follow_the_documented_order() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(Some(common::CASE_STUDY.into()), None, NfrMap::new()).unwrap();
    assert_eq!(s.state, SessionState::Created);
    let mut seen = vec![s.state];
    let mut state = s.state;
    while state != SessionState::DeployedModelReady {
        state = store.advance(&engine, &s.id, &input_for(state)).unwrap().state;
        seen.push(state);
    }
    assert_eq!(seen, ORDER);

    let done = store.load(&s.id).unwrap();
    assert_eq!(done.entry_points, vec!["grover".to_owned()]);
    assert_eq!(done.candidates[0][0].pattern_id, "grover");
    let bundle_dir = store.bundle_dir(&done).unwrap();
    assert!(bundle_dir.join("bundle.json").is_file());
    assert!(bundle_dir.join(DEPLOYMENT_FILE).is_file());
    assert_eq!(done.bundle.as_ref().unwrap().path, BUNDLE_DIR);
    let model = done.deployment_model.unwrap();
    assert!(model.nodes.iter().any(|n| n.properties.get("provider").map(String::as_str) == Some("ibmq")));

    let err = store.advance(&engine, &s.id, &AdvanceInput::default()).unwrap_err();
    assert!(matches!(err, ServiceError::InvalidTransition { state: SessionState::DeployedModelReady, .. }));
}

#[test]
fn restart_between_every_pair_of_states_resumes_identically() {
    let straight_dir = tempfile::tempdir().unwrap();
    let straight_store = SessionStore::open(straight_dir.path()).unwrap();
    let straight_engine = engine();
    let a = straight_store.create(Some(common::CASE_STUDY.into()), None, NfrMap::new()).unwrap();
    let mut trace_a = vec![comparable(&a)];
    let mut state = a.state;
    while state != SessionState::DeployedModelReady {
        let s = straight_store.advance(&straight_engine, &a.id, &input_for(state)).unwrap();
        state = s.state;
        trace_a.push(comparable(&s));
    }

    // fresh engine and store for every step, as after a process restart
    let dir = tempfile::tempdir().unwrap();
    let id = SessionStore::open(dir.path()).unwrap().create(Some(common::CASE_STUDY.into()), None, NfrMap::new()).unwrap().id;
    let mut trace_b = vec![comparable(&SessionStore::open(dir.path()).unwrap().load(&id).unwrap())];
    loop {
        let store = SessionStore::open(dir.path()).unwrap();
        let current = store.load(&id).unwrap();
        if current.state == SessionState::DeployedModelReady {
            break;
        }
        let s = store.advance(&engine(), &id, &input_for(current.state)).unwrap();
        trace_b.push(comparable(&s));
    }
    assert_eq!(trace_a, trace_b);
    let bundle = |root: &Path, id: &str| std::fs::read(root.join(id).join(BUNDLE_DIR).join("bundle.json")).unwrap();
    assert_eq!(bundle(straight_dir.path(), &a.id), bundle(dir.path(), &id));
}

#[test]
fn run_to_pause_stops_at_graph_proposal() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(None, None, NfrMap::new()).unwrap();
    let run = AdvanceInput { run_to_pause: true, ..AdvanceInput::text(common::CASE_STUDY) };
    assert_eq!(store.advance(&engine, &s.id, &run).unwrap().state, SessionState::GraphProposed);
    let run = AdvanceInput { run_to_pause: true, ..AdvanceInput::confirm() };
    assert_eq!(store.advance(&engine, &s.id, &run).unwrap().state, SessionState::DeployedModelReady);
}

#[test]
fn created_without_text_is_an_invalid_transition() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(None, None, NfrMap::new()).unwrap();
    let err = store.advance(&engine, &s.id, &AdvanceInput::default()).unwrap_err();
    assert!(matches!(err, ServiceError::InvalidTransition { state: SessionState::Created, .. }));
    assert_eq!(store.load(&s.id).unwrap().state, SessionState::Created);
}

#[test]
fn input_not_taken_by_a_state_is_rejected() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(Some(common::CASE_STUDY.into()), None, NfrMap::new()).unwrap();
    let err = store.advance(&engine, &s.id, &AdvanceInput::confirm()).unwrap_err();
    assert!(matches!(err, ServiceError::InvalidTransition { .. }));
    store.advance(&engine, &s.id, &AdvanceInput::default()).unwrap();
    let err = store.advance(&engine, &s.id, &AdvanceInput::text("other")).unwrap_err();
    assert!(matches!(err, ServiceError::InvalidTransition { state: SessionState::RequirementsReady, .. }));
}

#[test]
fn graph_proposed_needs_edits_or_confirmation() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(Some(common::CASE_STUDY.into()), None, NfrMap::new()).unwrap();
    let s = store.advance(&engine, &s.id, &AdvanceInput { run_to_pause: true, ..Default::default() }).unwrap();
    assert_eq!(s.state, SessionState::GraphProposed);
    assert!(matches!(
        store.advance(&engine, &s.id, &AdvanceInput::default()),
        Err(ServiceError::InvalidTransition { state: SessionState::GraphProposed, .. })
    ));

    // removing the entry point is refused and leaves the session untouched
    let before = store.load(&s.id).unwrap();
    let err = store.edit_graph(&engine, &s.id, 0, &[GraphEdit::RemovePattern { id: "grover".into() }]).unwrap_err();
    assert!(matches!(err, ServiceError::Graph(_)));
    assert_eq!(store.load(&s.id).unwrap(), before);
}

#[test]
fn edits_that_disconnect_block_confirmation() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(Some(common::CASE_STUDY.into()), None, NfrMap::new()).unwrap();
    store.advance(&engine, &s.id, &AdvanceInput { run_to_pause: true, ..Default::default() }).unwrap();
    // an isolated extra pattern makes the graph disconnected
    let lonely = engine
        .language
        .patterns()
        .iter()
        .map(|p| p.id.clone())
        .find(|id| !store.load(&s.id).unwrap().graphs[0].nodes.contains(id))
        .unwrap();
    let s = store.edit_graph(&engine, &s.id, 0, &[GraphEdit::AddPattern { id: lonely.clone() }]).unwrap();
    assert!(s.graphs[0].nodes.contains(&lonely));
    let err = store.advance(&engine, &s.id, &AdvanceInput::confirm()).unwrap_err();
    assert!(matches!(err, ServiceError::InvalidGraph { subproblem: 0, .. }));
    assert_eq!(store.load(&s.id).unwrap().state, SessionState::GraphProposed);

    // undoing the edit in the same call as the confirmation succeeds
    let fix = AdvanceInput { edits: vec![GraphEdit::RemovePattern { id: lonely }], ..AdvanceInput::confirm() };
    assert_eq!(store.advance(&engine, &s.id, &fix).unwrap().state, SessionState::GraphConfirmed);
}

#[test]
fn gibberish_needs_more_details() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(Some("zorblax quuxify frobnicate".into()), None, NfrMap::new()).unwrap();
    let s = store.advance(&engine, &s.id, &AdvanceInput { run_to_pause: true, ..Default::default() }).unwrap();
    assert_eq!(s.state, SessionState::FailedNeedsInput);
    let reason = s.failure_reason.unwrap();
    assert_eq!(reason.kind, FailureKind::NoEntryPointFound);
    assert!(reason.message.contains("additional details"));
}

#[test]
fn stopwords_only_needs_more_details() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(Some("it is the one".into()), None, NfrMap::new()).unwrap();
    let s = store.advance(&engine, &s.id, &AdvanceInput::default()).unwrap();
    assert_eq!(s.state, SessionState::FailedNeedsInput);
    assert_eq!(s.failure_reason.unwrap().kind, FailureKind::EmptyDescription);
}

#[test]
fn contradictory_provider_needs_more_input_and_recovers() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let ionq = NfrMap::from([(NfrKey::Provider, "ionq".to_owned())]);
    let s = store.create(Some(common::CASE_STUDY.into()), None, ionq).unwrap();
    let run = |input: AdvanceInput| store.advance(&engine, &s.id, &AdvanceInput { run_to_pause: true, ..input }).unwrap();
    assert_eq!(run(AdvanceInput::default()).state, SessionState::GraphProposed);
    let failed = run(AdvanceInput::confirm());
    assert_eq!(failed.state, SessionState::FailedNeedsInput);
    let reason = failed.failure_reason.clone().unwrap();
    assert_eq!(reason.kind, FailureKind::NoValidSelection);
    assert!(reason.message.contains("additional input"));
    assert!(reason.uncovered_patterns.contains(&"grover".to_owned()));

    // re-input without anything new is refused
    assert!(store.advance(&engine, &s.id, &AdvanceInput::default()).is_err());

    let fixed = run(AdvanceInput { nfrs: Some(NfrMap::new()), ..Default::default() });
    assert_eq!(fixed.state, SessionState::GraphProposed);
    assert!(fixed.failure_reason.is_none());
    let done = run(AdvanceInput::confirm());
    assert_eq!(done.state, SessionState::DeployedModelReady);
    assert_eq!(done.effective_nfrs()[&NfrKey::Provider], "ibmq");
}

#[test]
fn overrides_win_over_extracted_nfrs() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let aws = NfrMap::from([(NfrKey::Provider, "aws".to_owned())]);
    let s = store.create(Some(common::CASE_STUDY.into()), None, aws).unwrap();
    store.advance(&engine, &s.id, &AdvanceInput { run_to_pause: true, ..Default::default() }).unwrap();
    let done = store.advance(&engine, &s.id, &AdvanceInput { run_to_pause: true, ..AdvanceInput::confirm() }).unwrap();
    assert_eq!(done.state, SessionState::DeployedModelReady);
    assert!(done.selections[0].assignments.values().all(|s| s.ends_with("-braket")));
}

#[test]
fn threshold_one_then_corrected_threshold() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(Some(common::CASE_STUDY.into()), Some(1.0), NfrMap::new()).unwrap();
    let failed = store.advance(&engine, &s.id, &AdvanceInput { run_to_pause: true, ..Default::default() }).unwrap();
    assert_eq!(failed.failure_reason.unwrap().kind, FailureKind::NoEntryPointFound);
    let again = AdvanceInput { threshold: Some(0.1), run_to_pause: true, ..Default::default() };
    assert_eq!(store.advance(&engine, &s.id, &again).unwrap().state, SessionState::GraphProposed);
    assert!(matches!(store.create(None, Some(1.5), NfrMap::new()), Err(ServiceError::InvalidInput(_))));
}

#[test]
fn advance_once_is_pure_apart_from_bundle_files() {
    let engine = engine();
    let dir = tempfile::tempdir().unwrap();
    let mut s = PipelineSession::new("x");
    s.text = Some(common::CASE_STUDY.into());
    let once = advance_once(&s, &AdvanceInput::default(), &engine, dir.path()).unwrap();
    assert_eq!(once, advance_once(&s, &AdvanceInput::default(), &engine, dir.path()).unwrap());
    assert_eq!(s.state, SessionState::Created);
}

#[test]
fn unknown_and_malformed_ids() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    assert!(matches!(store.load("../../etc/passwd"), Err(ServiceError::SessionNotFound(_))));
    assert!(matches!(
        store.load("00000000-0000-4000-8000-000000000000"),
        Err(ServiceError::SessionNotFound(_))
    ));
}
