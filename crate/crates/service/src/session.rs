//! The eight-phase pipeline as a resumable state machine.
//!
//! `advance_once` performs exactly one transition. All state lives in the
//! serialized session plus the bundle written below the artifact directory,
//! so a session can be reloaded between any two transitions.

use std::fmt;
use std::path::Path;

use patternforge::compose::{
    aggregate, combine_bundles, contributing_solutions, generate_deployment_model, read_bundle, write_bundle,
    DeploymentModel,
};
use patternforge::graph::{apply_edit, expand_pattern_graph, load_predefined_graph, validate_graph, GraphEdit, PatternGraph};
use patternforge::matcher::{rank_entry_points, EntryPointCandidate, DEFAULT_THRESHOLD};
use patternforge::requirements::{extract, ContextDescription, ExtractError};
use patternforge::solver::{
    compute_solution_graph, filter_solutions, find_valid_selection, resolve_operators, SolutionGraph, SolutionSelection,
};
use patternforge::util::write_json;
use patternforge::{NfrMap, RequirementSet};
use serde::{Deserialize, Serialize};

use crate::{Engine, ServiceError};

/// Directory below a session's artifact directory holding the bundle.
pub const BUNDLE_DIR: &str = "bundle";
/// Deployment model file, written next to `bundle.json`.
pub const DEPLOYMENT_FILE: &str = "deployment.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    RequirementsReady,
    EntryMatched,
    GraphProposed,
    GraphConfirmed,
    SolutionsComputed,
    SelectionReady,
    Aggregated,
    DeployedModelReady,
    FailedNeedsInput,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Created => "created",
            SessionState::RequirementsReady => "requirements_ready",
            SessionState::EntryMatched => "entry_matched",
            SessionState::GraphProposed => "graph_proposed",
            SessionState::GraphConfirmed => "graph_confirmed",
            SessionState::SolutionsComputed => "solutions_computed",
            SessionState::SelectionReady => "selection_ready",
            SessionState::Aggregated => "aggregated",
            SessionState::DeployedModelReady => "deployed_model_ready",
            SessionState::FailedNeedsInput => "failed_needs_input",
        }
    }

    /// States where the pipeline waits for a human (or is done).
    pub fn is_pause(self) -> bool {
        matches!(
            self,
            SessionState::GraphProposed | SessionState::DeployedModelReady | SessionState::FailedNeedsInput
        )
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    EmptyDescription,
    NoEntryPointFound,
    NoValidSelection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReason {
    pub kind: FailureKind,
    /// Human readable request for more input.
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subproblem: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub uncovered_patterns: Vec<String>,
}

/// Optional input to `advance`. Which fields are accepted depends on the state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvanceInput {
    /// New problem description (created, failed_needs_input).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// NFR overrides, merged over the extracted ones (created, failed_needs_input).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nfrs: Option<NfrMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Replaces the top-ranked entry point of each sub-problem (entry_matched).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_points: Option<Vec<String>>,
    /// Edits to the proposed graph of `subproblem` (graph_proposed).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edits: Vec<GraphEdit>,
    #[serde(default)]
    pub subproblem: usize,
    /// Accepts the proposed graphs (graph_proposed).
    #[serde(default)]
    pub confirm: bool,
    /// Keep advancing until the next pause point.
    #[serde(default)]
    pub run_to_pause: bool,
}

impl AdvanceInput {
    pub fn text(text: impl Into<String>) -> Self {
        AdvanceInput { text: Some(text.into()), ..Default::default() }
    }

    pub fn confirm() -> Self {
        AdvanceInput { confirm: true, ..Default::default() }
    }

    fn reinput_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.text.is_some() {
            out.push("text");
        }
        if self.nfrs.is_some() {
            out.push("nfrs");
        }
        if self.threshold.is_some() {
            out.push("threshold");
        }
        out
    }

    /// Fields that are set, used to reject input a state does not take.
    fn provided(&self) -> Vec<&'static str> {
        let mut out = self.reinput_fields();
        if self.entry_points.is_some() {
            out.push("entry_points");
        }
        if !self.edits.is_empty() {
            out.push("edits");
        }
        if self.confirm {
            out.push("confirm");
        }
        out
    }
}

/// Where the assembled bundle lives, relative to the session's artifact directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleRef {
    pub id: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSession {
    pub id: String,
    pub state: SessionState,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub nfr_overrides: NfrMap,
    #[serde(default)]
    pub requirements: Option<RequirementSet>,
    /// Ranked candidates per sub-problem.
    #[serde(default)]
    pub candidates: Vec<Vec<EntryPointCandidate>>,
    #[serde(default)]
    pub entry_points: Vec<String>,
    #[serde(default)]
    pub graphs: Vec<PatternGraph>,
    #[serde(default)]
    pub solution_graphs: Vec<SolutionGraph>,
    #[serde(default)]
    pub selections: Vec<SolutionSelection>,
    #[serde(default)]
    pub bundle: Option<BundleRef>,
    #[serde(default)]
    pub deployment_model: Option<DeploymentModel>,
    #[serde(default)]
    pub failure_reason: Option<FailureReason>,
}

impl PipelineSession {
    pub fn new(id: impl Into<String>) -> Self {
        PipelineSession {
            id: id.into(),
            state: SessionState::Created,
            text: None,
            threshold: None,
            nfr_overrides: NfrMap::new(),
            requirements: None,
            candidates: Vec::new(),
            entry_points: Vec::new(),
            graphs: Vec::new(),
            solution_graphs: Vec::new(),
            selections: Vec::new(),
            bundle: None,
            deployment_model: None,
            failure_reason: None,
        }
    }

    /// Extracted NFRs with the overrides on top.
    pub fn effective_nfrs(&self) -> NfrMap {
        let mut nfrs = self.requirements.as_ref().map(|r| r.nfrs.clone()).unwrap_or_default();
        nfrs.extend(self.nfr_overrides.iter().map(|(k, v)| (*k, v.clone())));
        nfrs
    }

    fn clear_artifacts(&mut self) {
        let keep = PipelineSession {
            text: self.text.take(),
            threshold: self.threshold,
            nfr_overrides: std::mem::take(&mut self.nfr_overrides),
            ..PipelineSession::new(std::mem::take(&mut self.id))
        };
        *self = keep;
    }

    fn fail(&mut self, reason: FailureReason) {
        self.state = SessionState::FailedNeedsInput;
        self.failure_reason = Some(reason);
    }

    pub fn graph(&self, subproblem: usize) -> Option<&PatternGraph> {
        self.graphs.get(subproblem)
    }
}

fn invalid(state: SessionState, reason: impl Into<String>) -> ServiceError {
    ServiceError::InvalidTransition { state, reason: reason.into() }
}

fn accept_only(session: &PipelineSession, input: &AdvanceInput, allowed: &[&str]) -> Result<(), ServiceError> {
    match input.provided().into_iter().find(|f| !allowed.contains(f)) {
        Some(f) => Err(invalid(session.state, format!("input `{f}` is not accepted in this state"))),
        None => Ok(()),
    }
}

/// Applies `edits` to the proposed graph of `subproblem`.
pub fn edit_graph(
    session: &PipelineSession,
    subproblem: usize,
    edits: &[GraphEdit],
    engine: &Engine,
) -> Result<PipelineSession, ServiceError> {
    if session.state != SessionState::GraphProposed {
        return Err(invalid(session.state, "the graph can only be edited while it is proposed"));
    }
    let mut next = session.clone();
    let graph = next.graphs.get_mut(subproblem).ok_or(ServiceError::UnknownSubproblem(subproblem))?;
    for edit in edits {
        *graph = apply_edit(graph, edit, &engine.language)?;
    }
    Ok(next)
}

/// Performs one transition. The returned session is the new state; nothing is
/// persisted here except bundle files below `artifacts`.
pub fn advance_once(
    session: &PipelineSession,
    input: &AdvanceInput,
    engine: &Engine,
    artifacts: &Path,
) -> Result<PipelineSession, ServiceError> {
    let mut s = session.clone();
    match s.state {
        SessionState::FailedNeedsInput => {
            accept_only(&s, input, &["text", "nfrs", "threshold"])?;
            if input.reinput_fields().is_empty() {
                return Err(invalid(s.state, "corrected input (text, nfrs or threshold) is required"));
            }
            s.clear_artifacts();
            apply_reinput(&mut s, input)?;
            extract_step(&mut s, engine)?;
        }
        SessionState::Created => {
            accept_only(&s, input, &["text", "nfrs", "threshold"])?;
            apply_reinput(&mut s, input)?;
            extract_step(&mut s, engine)?;
        }
        SessionState::RequirementsReady => {
            accept_only(&s, input, &[])?;
            let requirements = s.requirements.clone().expect("requirements_ready carries requirements");
            let threshold = s.threshold.or(engine.language.threshold()).unwrap_or(DEFAULT_THRESHOLD);
            let nfrs = s.effective_nfrs();
            let mut candidates = Vec::new();
            for sub in &requirements.subproblems {
                match rank_entry_points(&engine.index, sub, &nfrs, threshold) {
                    Ok(ranked) => candidates.push(ranked),
                    Err(e) => {
                        s.fail(FailureReason {
                            kind: FailureKind::NoEntryPointFound,
                            message: e.to_string(),
                            subproblem: Some(e.subproblem),
                            uncovered_patterns: vec![],
                        });
                        return Ok(s);
                    }
                }
            }
            s.entry_points = candidates.iter().map(|c| c[0].pattern_id.clone()).collect();
            s.candidates = candidates;
            s.state = SessionState::EntryMatched;
        }
        SessionState::EntryMatched => {
            accept_only(&s, input, &["entry_points"])?;
            if let Some(chosen) = &input.entry_points {
                if chosen.len() != s.entry_points.len() {
                    return Err(invalid(
                        s.state,
                        format!("expected {} entry points, got {}", s.entry_points.len(), chosen.len()),
                    ));
                }
                s.entry_points = chosen.clone();
            }
            let mut graphs = Vec::new();
            for entry in &s.entry_points {
                let graph = match load_predefined_graph(&engine.language, entry)? {
                    Some(g) => g,
                    None => expand_pattern_graph(&engine.language, entry, &engine.expansion)?,
                };
                graphs.push(graph);
            }
            s.graphs = graphs;
            s.state = SessionState::GraphProposed;
        }
        SessionState::GraphProposed => {
            accept_only(&s, input, &["edits", "confirm"])?;
            if input.edits.is_empty() && !input.confirm {
                return Err(invalid(s.state, "edits or a confirmation are required"));
            }
            s = edit_graph(&s, input.subproblem, &input.edits, engine)?;
            if input.confirm {
                for (k, g) in s.graphs.iter().enumerate() {
                    let report = validate_graph(g, &engine.language);
                    if !report.is_empty() {
                        return Err(ServiceError::InvalidGraph { subproblem: k, report });
                    }
                }
                s.state = SessionState::GraphConfirmed;
            }
        }
        SessionState::GraphConfirmed => {
            accept_only(&s, input, &[])?;
            let nfrs = s.effective_nfrs();
            let mut out = Vec::new();
            for g in &s.graphs {
                let filtered = filter_solutions(&compute_solution_graph(g, &engine.repo), &nfrs, &engine.repo);
                out.push(resolve_operators(&filtered, &engine.repo)?);
            }
            s.solution_graphs = out;
            s.state = SessionState::SolutionsComputed;
        }
        SessionState::SolutionsComputed => {
            accept_only(&s, input, &[])?;
            let mut selections = Vec::new();
            for (k, sg) in s.solution_graphs.iter().enumerate() {
                match find_valid_selection(sg) {
                    Ok(sel) => selections.push(sel),
                    Err(e) => {
                        let reason = FailureReason {
                            kind: FailureKind::NoValidSelection,
                            message: e.to_string(),
                            subproblem: Some(k),
                            uncovered_patterns: e.uncovered_patterns.clone(),
                        };
                        s.fail(reason);
                        return Ok(s);
                    }
                }
            }
            s.selections = selections;
            s.state = SessionState::SelectionReady;
        }
        SessionState::SelectionReady => {
            accept_only(&s, input, &[])?;
            let bundles =
                s.selections.iter().map(|sel| aggregate(sel, &engine.repo)).collect::<Result<Vec<_>, _>>()?;
            let bundle = combine_bundles(&bundles, &engine.repo)?;
            let dir = artifacts.join(BUNDLE_DIR);
            if dir.exists() {
                std::fs::remove_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
            }
            write_bundle(&bundle, &dir)?;
            s.bundle = Some(BundleRef { id: bundle.id.clone(), path: BUNDLE_DIR.to_owned() });
            s.state = SessionState::Aggregated;
        }
        SessionState::Aggregated => {
            accept_only(&s, input, &[])?;
            let bref = s.bundle.as_ref().expect("aggregated carries a bundle");
            let dir = artifacts.join(&bref.path);
            let bundle = read_bundle(&dir)?;
            let model =
                generate_deployment_model(&bundle, &contributing_solutions(&bundle, &engine.repo)?, &s.effective_nfrs());
            let path = dir.join(DEPLOYMENT_FILE);
            write_json(&path, &model).map_err(|e| ServiceError::io(&path, e))?;
            s.deployment_model = Some(model);
            s.state = SessionState::DeployedModelReady;
        }
        SessionState::DeployedModelReady => {
            return Err(invalid(s.state, "the pipeline has finished"));
        }
    }
    Ok(s)
}

fn apply_reinput(s: &mut PipelineSession, input: &AdvanceInput) -> Result<(), ServiceError> {
    if let Some(t) = input.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(ServiceError::InvalidInput(format!("threshold {t} is outside [0, 1]")));
        }
    }
    if let Some(text) = &input.text {
        s.text = Some(text.clone());
    }
    if let Some(nfrs) = &input.nfrs {
        s.nfr_overrides = nfrs.clone();
    }
    if input.threshold.is_some() {
        s.threshold = input.threshold;
    }
    Ok(())
}

fn extract_step(s: &mut PipelineSession, engine: &Engine) -> Result<(), ServiceError> {
    let Some(text) = &s.text else {
        return Err(invalid(s.state, "a problem description is required"));
    };
    match extract(&ContextDescription::new(text.clone()), &engine.extractor) {
        Ok(set) => {
            s.requirements = Some(set);
            s.state = SessionState::RequirementsReady;
        }
        Err(e @ ExtractError::EmptyDescription) => s.fail(FailureReason {
            kind: FailureKind::EmptyDescription,
            message: e.to_string(),
            subproblem: None,
            uncovered_patterns: vec![],
        }),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}
