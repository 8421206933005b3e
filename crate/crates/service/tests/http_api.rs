#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Read;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use patternforge::graph::PatternGraph;
use patternforge::solver::SolutionGraph;
use patternforge_service::http::router;
use patternforge_service::{Engine, PipelineSession, SessionState, SessionStore};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api {
    app: Router,
    _dir: tempfile::TempDir,
}

fn api() -> Api {
    let engine =
        Engine::open(&common::data_dir("quantum-patterns"), &common::data_dir("quantum-solutions")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    Api { app: router(Arc::new(engine), store), _dir: dir }
}

impl Api {
    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
        let req = match body {
            Some(b) => req.body(Body::from(b.to_string())).unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.call(method, uri, body).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn session(&self, method: &str, uri: &str, body: Option<Value>) -> PipelineSession {
        let (status, v) = self.json(method, uri, body).await;
        assert!(status.is_success(), "{uri}: {status} {v}");
        serde_json::from_value(v).unwrap()
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn confirm_without_edits_reaches_a_bundle() {
    let api = api();
    let (status, created) = api.json("POST", "/sessions", Some(json!({ "text": common::CASE_STUDY }))).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["id"].as_str().unwrap().to_owned();
    assert_eq!(created["state"], "created");

    let s = api.session("POST", &format!("/sessions/{id}/advance"), None).await;
    assert_eq!(s.state, SessionState::RequirementsReady);
    let s = api.session("POST", &format!("/sessions/{id}/advance"), Some(json!({}))).await;
    assert_eq!(s.state, SessionState::EntryMatched);
    assert_eq!(s.candidates[0][0].pattern_id, "grover");
    let s = api.session("POST", &format!("/sessions/{id}/advance"), None).await;
    assert_eq!(s.state, SessionState::GraphProposed);

    let (status, graph) = api.json("GET", &format!("/sessions/{id}/graph"), None).await;
    assert_eq!(status, StatusCode::OK);
    let graph: PatternGraph = serde_json::from_value(graph).unwrap();
    for p in ["grover", "initialization", "uniform-superposition", "oracle"] {
        assert!(graph.nodes.contains(p), "{p}");
    }
    let (status, _) = api.json("GET", &format!("/sessions/{id}/solution-graph"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let s = api.session("POST", &format!("/sessions/{id}/graph/confirm"), None).await;
    assert_eq!(s.state, SessionState::GraphConfirmed);
    let (status, _) = api.json("POST", &format!("/sessions/{id}/graph/confirm"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let s = api.session("POST", &format!("/sessions/{id}/advance"), Some(json!({ "run_to_pause": true }))).await;
    assert_eq!(s.state, SessionState::DeployedModelReady);

    let (_, sg) = api.json("GET", &format!("/sessions/{id}/solution-graph"), None).await;
    let sg: SolutionGraph = serde_json::from_value(sg).unwrap();
    for p in &graph.nodes {
        assert_eq!(sg.solutions_of(p).len(), 1, "{p}");
    }

    let (status, tar_bytes) = api.call("GET", &format!("/sessions/{id}/bundle"), None).await;
    assert_eq!(status, StatusCode::OK);
    let mut archive = tar::Archive::new(tar_bytes.as_slice());
    let mut names = Vec::new();
    let mut main = String::new();
    for entry in archive.entries().unwrap() {
        let mut entry = entry.unwrap();
        let name = entry.path().unwrap().to_string_lossy().into_owned();
        if name == "bundle/app/main.py" {
            entry.read_to_string(&mut main).unwrap();
        }
        names.push(name);
    }
    assert!(names.contains(&"bundle/bundle.json".to_owned()));
    assert!(names.contains(&"bundle/deployment.json".to_owned()));
    assert_eq!(main, std::fs::read_to_string(common::golden_main()).unwrap());

    let (_, got) = api.json("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(got["state"], "deployed_model_ready");
    assert_eq!(got["bundle"]["id"], s.bundle.unwrap().id);
}

#[tokio::test(flavor = "multi_thread")]
async fn edits_round_trip_and_entry_removal_is_rejected() {
    let api = api();
    let (_, created) = api.json("POST", "/sessions", Some(json!({ "text": common::CASE_STUDY }))).await;
    let id = created["id"].as_str().unwrap().to_owned();
    let (status, _) = api.json("POST", &format!("/sessions/{id}/graph/edits"), Some(json!([]))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    api.session("POST", &format!("/sessions/{id}/advance"), Some(json!({ "run_to_pause": true }))).await;
    let (_, before) = api.json("GET", &format!("/sessions/{id}/graph"), None).await;

    let add = json!([{ "op": "add_pattern", "payload": { "id": "circuit-cutting" } }]);
    let (status, edited) = api.json("POST", &format!("/sessions/{id}/graph/edits"), Some(add)).await;
    assert_eq!(status, StatusCode::OK, "{edited}");
    assert!(edited["nodes"].as_array().unwrap().contains(&json!("circuit-cutting")));
    assert_eq!(edited["origin"], "edited");

    let remove = json!([{ "op": "remove_pattern", "payload": { "id": "circuit-cutting" } }]);
    let (_, back) = api.json("POST", &format!("/sessions/{id}/graph/edits"), Some(remove)).await;
    assert_eq!(back["nodes"], before["nodes"]);
    assert_eq!(back["edges"], before["edges"]);
    let (_, served) = api.json("GET", &format!("/sessions/{id}/graph"), None).await;
    assert_eq!(served, back);

    let entry = json!([{ "op": "remove_pattern", "payload": { "id": "grover" } }]);
    let (status, err) = api.json("POST", &format!("/sessions/{id}/graph/edits"), Some(entry)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "entry_point_removal");

    let (status, err) = api.json("POST", &format!("/sessions/{id}/graph/edits"), Some(json!({"op": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{err}");
}

#[tokio::test(flavor = "multi_thread")]
async fn disconnected_graph_confirmation_reports_violations() {
    let api = api();
    let (_, created) = api.json("POST", "/sessions", Some(json!({ "text": common::CASE_STUDY }))).await;
    let id = created["id"].as_str().unwrap().to_owned();
    api.session("POST", &format!("/sessions/{id}/advance"), Some(json!({ "run_to_pause": true }))).await;
    let add = json!([{ "op": "add_pattern", "payload": { "id": "circuit-cutting" } }]);
    api.json("POST", &format!("/sessions/{id}/graph/edits"), Some(add)).await;
    let (status, err) = api.json("POST", &format!("/sessions/{id}/graph/confirm"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "invalid_graph");
    assert!(err["detail"].to_string().contains("circuit-cutting"), "{err}");
}

#[tokio::test(flavor = "multi_thread")]
async fn failure_and_reinput_over_http() {
    let api = api();
    let body = json!({ "text": common::CASE_STUDY, "threshold": 1.0 });
    let (_, created) = api.json("POST", "/sessions", Some(body)).await;
    let id = created["id"].as_str().unwrap().to_owned();
    let s = api.session("POST", &format!("/sessions/{id}/advance"), Some(json!({ "run_to_pause": true }))).await;
    assert_eq!(s.state, SessionState::FailedNeedsInput);
    let (_, raw) = api.json("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(raw["failure_reason"]["kind"], "no_entry_point_found");

    let retry = json!({ "threshold": 0.05, "run_to_pause": true });
    let s = api.session("POST", &format!("/sessions/{id}/advance"), Some(retry)).await;
    assert_eq!(s.state, SessionState::GraphProposed);
}

#[tokio::test(flavor = "multi_thread")]
async fn error_statuses() {
    let api = api();
    let (status, body) = api.json("GET", "/sessions/not-a-session", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "session_not_found");
    let (status, _) = api.json("POST", "/sessions", Some(json!({ "txt": "typo" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, created) = api.json("POST", "/sessions", None).await;
    let id = created["id"].as_str().unwrap().to_owned();
    let (status, body) = api.json("POST", &format!("/sessions/{id}/advance"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "invalid_transition");
    let (status, _) = api.json("GET", &format!("/sessions/{id}/bundle"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = api.json("GET", &format!("/sessions/{id}/graph?subproblem=3"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn languages_are_readable() {
    let api = api();
    let (status, langs) = api.json("GET", "/languages", None).await;
    assert_eq!(status, StatusCode::OK);
    let lang_id = langs[0]["id"].as_str().unwrap().to_owned();
    assert_eq!(langs[0]["patterns"].as_array().unwrap().len(), 18);
    let (status, p) = api.json("GET", &format!("/languages/{lang_id}/patterns/grover"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(p["id"], "grover");
    let (status, _) = api.json("GET", &format!("/languages/{lang_id}/patterns/nope"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = api.json("GET", "/languages/other/patterns/grover", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_advances_on_one_session_are_serialized() {
    let api = Arc::new(api());
    let (_, created) = api.json("POST", "/sessions", Some(json!({ "text": common::CASE_STUDY }))).await;
    let id = created["id"].as_str().unwrap().to_owned();
    // three steps lead from created to graph_proposed; the fourth call must conflict
    let calls = (0..4).map(|_| {
        let api = api.clone();
        let uri = format!("/sessions/{id}/advance");
        tokio::spawn(async move { api.json("POST", &uri, None).await })
    });
    let mut ok = Vec::new();
    let mut conflicts = 0;
    for c in calls {
        let (status, body) = c.await.unwrap();
        if status == StatusCode::OK {
            ok.push(body["state"].as_str().unwrap().to_owned());
        } else {
            assert_eq!(status, StatusCode::CONFLICT, "{body}");
            conflicts += 1;
        }
    }
    ok.sort();
    assert_eq!(ok, vec!["entry_matched", "graph_proposed", "requirements_ready"]);
    assert_eq!(conflicts, 1);
}
