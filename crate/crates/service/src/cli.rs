//! The `pf` command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use patternforge::compose::{
    aggregate, combine_bundles, contributing_solutions, generate_deployment_model, read_bundle, run_local,
    write_bundle, ComposeError, RunConfig,
};
use patternforge::graph::{expand_pattern_graph, load_predefined_graph, ExpansionConfig, PatternGraph};
use patternforge::matcher::{rank_entry_points, DEFAULT_THRESHOLD};
use patternforge::pattern::load_pattern_language;
use patternforge::repo::open_repository;
use patternforge::requirements::{extract, ContextDescription, ExtractorBinding, RemoteExtractorConfig};
use patternforge::solver::{
    compute_solution_graph, filter_solutions, find_valid_selection, resolve_operators, SolutionGraph,
    SolutionSelection,
};
use patternforge::util::{to_json_pretty, write_json};
use patternforge::{NfrKey, NfrMap, RelationKind};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::session::{AdvanceInput, FailureKind, PipelineSession, SessionState};
use crate::{Engine, ServiceError, SessionStore, LANGUAGE_ENV, REPO_ENV, SESSION_ENV};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_NO_ENTRY_POINT: i32 = 3;
pub const EXIT_NO_VALID_SELECTION: i32 = 4;
pub const EXIT_INPUT: i32 = 5;
pub const EXIT_COMPOSITION: i32 = 6;
pub const EXIT_EXEC_FAILED: i32 = 7;
pub const EXIT_TIMEOUT: i32 = 8;

#[derive(Debug, Parser)]
#[command(name = "pf", version, about = "Turn problem descriptions into application bundles using a pattern language")]
pub struct Cli {
    /// Solution repository directory.
    #[arg(long, env = REPO_ENV, global = true)]
    pub repo: Option<PathBuf>,
    /// Pattern language directory.
    #[arg(long, env = LANGUAGE_ENV, global = true)]
    pub language: Option<PathBuf>,
    /// Minimum similarity for entry points (defaults to the language's value).
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// NFR override `key=value`; repeatable, wins over extracted NFRs.
    #[arg(long = "nfr", value_parser = parse_nfr, global = true)]
    pub nfrs: Vec<(NfrKey, String)>,
    /// Machine readable errors on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    /// Endpoint of a remote requirement extractor; the built-in one is used otherwise.
    #[arg(long, env = "PF_EXTRACTOR_URL", global = true)]
    pub extractor_url: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run or resume the whole pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Extract requirements and rank entry points.
    Match(InputArgs),
    /// Build the pattern graph of an entry point.
    Graph {
        #[arg(long)]
        entry: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Relation kinds to follow, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "requires")]
        follow: Vec<RelationKind>,
        /// Ignore expert graphs attached to the entry point.
        #[arg(long)]
        no_predefined: bool,
    },
    /// Select one solution per pattern.
    Solve {
        /// Pattern graph to expand into solutions and filter by `--nfr`.
        #[arg(long, conflicts_with = "solution_graph", required_unless_present = "solution_graph")]
        graph: Option<PathBuf>,
        /// Already filtered solution graph.
        #[arg(long)]
        solution_graph: Option<PathBuf>,
    },
    /// Aggregate selections into one sealed bundle.
    Aggregate {
        /// Selection file; repeat for several sub-problems.
        #[arg(long = "selection", required = true)]
        selections: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive the deployment model of a bundle.
    DeployModel {
        #[arg(long)]
        bundle: PathBuf,
        /// Written to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a bundle locally.
    Exec {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        timeout_seconds: f64,
        /// Keep the run directory below this path.
        #[arg(long)]
        workdir: Option<PathBuf>,
        /// Extra environment `KEY=VALUE`; repeatable.
        #[arg(long = "env", value_parser = parse_env)]
        env: Vec<(String, String)>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, env = SESSION_ENV)]
        session_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Description file, `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PipelineCommand {
    /// Start a session from a description and advance it as far as possible.
    Run {
        #[command(flatten)]
        input: InputArgs,
        /// Copy the bundle (with deployment.json) here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accept the proposed pattern graph without edits.
        #[arg(long)]
        auto_confirm_graph: bool,
        /// Persist the session here; required without --auto-confirm-graph.
        #[arg(long, env = SESSION_ENV)]
        session_dir: Option<PathBuf>,
    },
    /// Give input to a persisted session and advance it to the next pause.
    Advance {
        #[arg(long, env = SESSION_ENV)]
        session_dir: PathBuf,
        #[arg(long)]
        session: String,
        /// Corrected description file.
        #[arg(long)]
        text: Option<PathBuf>,
        /// JSON file with a list of graph edits.
        #[arg(long)]
        edits: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        subproblem: usize,
        #[arg(long)]
        confirm: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a persisted session.
    Show {
        #[arg(long, env = SESSION_ENV)]
        session_dir: PathBuf,
        #[arg(long)]
        session: String,
    },
}

fn parse_nfr(s: &str) -> Result<(NfrKey, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().parse()?, v.trim().to_owned()))
}

fn parse_env(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    Ok((k.to_owned(), v.to_owned()))
}

/// An error with the exit code of its class.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
    pub detail: Option<serde_json::Value>,
}

impl CliError {
    fn new(code: i32, kind: &str, message: impl Into<String>) -> Self {
        CliError { code, kind: kind.to_owned(), message: message.into(), detail: None }
    }

    fn input(message: impl Into<String>) -> Self {
        CliError::new(EXIT_INPUT, "invalid_input", message)
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        let code = match &e {
            ServiceError::Compose(c) => return c.into(),
            ServiceError::Io { .. } => EXIT_OTHER,
            _ => EXIT_INPUT,
        };
        CliError::new(code, e.kind(), e.to_string())
    }
}

impl From<&ComposeError> for CliError {
    fn from(e: &ComposeError) -> Self {
        let (code, kind, report) = match e {
            ComposeError::ExecutionFailed { report, .. } => (EXIT_EXEC_FAILED, "execution_failed", report.as_deref()),
            ComposeError::Timeout { report, .. } => (EXIT_TIMEOUT, "timeout", report.as_deref()),
            ComposeError::Io { .. } => (EXIT_OTHER, "io_error", None),
            _ => (EXIT_COMPOSITION, "composition_error", None),
        };
        let mut err = CliError::new(code, kind, e.to_string());
        err.detail = report.and_then(|r| serde_json::to_value(r).ok());
        err
    }
}

impl From<ComposeError> for CliError {
    fn from(e: ComposeError) -> Self {
        (&e).into()
    }
}

fn from_failure(session: &PipelineSession) -> CliError {
    let reason = session.failure_reason.as_ref().expect("failed sessions carry a reason");
    let code = match reason.kind {
        FailureKind::NoValidSelection => EXIT_NO_VALID_SELECTION,
        FailureKind::NoEntryPointFound => EXIT_NO_ENTRY_POINT,
        FailureKind::EmptyDescription => EXIT_INPUT,
    };
    let mut err = CliError::new(code, "failed_needs_input", reason.message.clone());
    err.detail = serde_json::to_value(session).ok();
    err
}

type CliResult<T = ()> = Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::input(format!("cannot read stdin: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("malformed JSON in {}: {e}", path.display())))
}

fn print_json<T: Serialize + ?Sized>(value: &T) {
    println!("{}", to_json_pretty(value));
}

fn copy_tree(from: &Path, to: &Path) -> CliResult {
    let bundle = read_bundle(from)?;
    write_bundle(&bundle, to)?;
    let deployment = from.join(crate::session::DEPLOYMENT_FILE);
    if deployment.exists() {
        let dst = to.join(crate::session::DEPLOYMENT_FILE);
        fs::copy(&deployment, &dst).map_err(|e| CliError::from(ServiceError::io(&dst, e)))?;
    }
    Ok(())
}

impl Cli {
    fn nfr_map(&self) -> NfrMap {
        self.nfrs.iter().cloned().collect()
    }

    fn required(&self, dir: &Option<PathBuf>, flag: &str, env: &str) -> CliResult<PathBuf> {
        dir.clone().ok_or_else(|| CliError::input(format!("--{flag} (or {env}) is required")))
    }

    fn extractor(&self) -> ExtractorBinding {
        match &self.extractor_url {
            Some(url) => ExtractorBinding::Remote(RemoteExtractorConfig::new(url.clone())),
            None => ExtractorBinding::default(),
        }
    }

    fn engine(&self) -> CliResult<Engine> {
        let language = self.required(&self.language, "language", LANGUAGE_ENV)?;
        let repo = self.required(&self.repo, "repo", REPO_ENV)?;
        Ok(Engine::open(&language, &repo)?.with_extractor(self.extractor()))
    }

    fn check_threshold(&self) -> CliResult {
        match self.threshold {
            Some(t) if !(0.0..=1.0).contains(&t) => Err(CliError::input(format!("threshold {t} is outside [0, 1]"))),
            _ => Ok(()),
        }
    }
}

/// Advances until a pause; confirms the graph when `auto_confirm` is set.
fn drive(store: &SessionStore, engine: &Engine, id: &str, first: AdvanceInput, auto_confirm: bool) -> CliResult<PipelineSession> {
    let mut session = store.advance(engine, id, &AdvanceInput { run_to_pause: true, ..first })?;
    if session.state == SessionState::GraphProposed && auto_confirm {
        session = store.advance(engine, id, &AdvanceInput { run_to_pause: true, ..AdvanceInput::confirm() })?;
    }
    Ok(session)
}

fn finish(store: &SessionStore, session: PipelineSession, out: Option<&Path>) -> CliResult {
    match session.state {
        SessionState::FailedNeedsInput => return Err(from_failure(&session)),
        SessionState::DeployedModelReady => {
            if let (Some(out), Some(dir)) = (out, store.bundle_dir(&session)) {
                copy_tree(&dir, out)?;
            }
        }
        _ => {}
    }
    print_json(&session);
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult {
    cli.check_threshold()?;
    match &cli.command {
        Command::Pipeline(PipelineCommand::Run { input, out, auto_confirm_graph, session_dir }) => {
            let text = read_text(&input.input)?;
            let engine = cli.engine()?;
            let scratch;
            let root = match session_dir {
                Some(d) => d.clone(),
                None if *auto_confirm_graph => {
                    scratch = tempfile::tempdir().map_err(|e| CliError::new(EXIT_OTHER, "io_error", e.to_string()))?;
                    scratch.path().to_owned()
                }
                None => {
                    return Err(CliError::input(
                        "without --auto-confirm-graph the session must be persisted: pass --session-dir",
                    ))
                }
            };
            let store = SessionStore::open(root)?;
            let session = store.create(Some(text), cli.threshold, cli.nfr_map())?;
            let session = drive(&store, &engine, &session.id, AdvanceInput::default(), *auto_confirm_graph)?;
            finish(&store, session, out.as_deref())
        }
        Command::Pipeline(PipelineCommand::Advance { session_dir, session, text, edits, subproblem, confirm, out }) => {
            let engine = cli.engine()?;
            let store = SessionStore::open(session_dir.clone())?;
            let current = store.load(session)?;
            let mut input = AdvanceInput { confirm: *confirm, subproblem: *subproblem, ..Default::default() };
            if let Some(t) = text {
                input.text = Some(read_text(t)?);
            }
            if let Some(e) = edits {
                input.edits = read_json(e)?;
            }
            if !cli.nfrs.is_empty() {
                input.nfrs = Some(cli.nfr_map());
            }
            input.threshold = cli.threshold;
            if current.state == SessionState::DeployedModelReady && input == AdvanceInput::default() {
                return finish(&store, current, out.as_deref());
            }
            let session = drive(&store, &engine, session, input, false)?;
            finish(&store, session, out.as_deref())
        }
        Command::Pipeline(PipelineCommand::Show { session_dir, session }) => {
            print_json(&SessionStore::open(session_dir.clone())?.load(session)?);
            Ok(())
        }
        Command::Match(args) => {
            let text = read_text(&args.input)?;
            let language = load_pattern_language(cli.required(&cli.language, "language", LANGUAGE_ENV)?)
                .map_err(ServiceError::from)?;
            let engine_index = patternforge::matcher::build_index(&language);
            let mut set = extract(&ContextDescription::new(text), &cli.extractor()).map_err(ServiceError::from)?;
            set.nfrs.extend(cli.nfr_map());
            let threshold = cli.threshold.or(language.threshold()).unwrap_or(DEFAULT_THRESHOLD);
            let mut candidates = Vec::new();
            for sub in &set.subproblems {
                let ranked = rank_entry_points(&engine_index, sub, &set.nfrs, threshold)
                    .map_err(|e| CliError::new(EXIT_NO_ENTRY_POINT, "no_entry_point_found", e.to_string()))?;
                candidates.push(ranked);
            }
            print_json(&serde_json::json!({ "requirements": set, "candidates": candidates }));
            Ok(())
        }
        Command::Graph { entry, depth, follow, no_predefined } => {
            let language = load_pattern_language(cli.required(&cli.language, "language", LANGUAGE_ENV)?)
                .map_err(ServiceError::from)?;
            let predefined =
                if *no_predefined { None } else { load_predefined_graph(&language, entry).map_err(ServiceError::from)? };
            let graph = match predefined {
                Some(g) => g,
                None => {
                    let config = ExpansionConfig { follow_kinds: follow.clone(), max_depth: *depth };
                    expand_pattern_graph(&language, entry, &config).map_err(ServiceError::from)?
                }
            };
            print_json(&graph);
            Ok(())
        }
        Command::Solve { graph, solution_graph } => {
            let repo = open_repository(cli.required(&cli.repo, "repo", REPO_ENV)?).map_err(ServiceError::from)?;
            let sg: SolutionGraph = match (graph, solution_graph) {
                (Some(g), _) => {
                    let pgraph: PatternGraph = read_json(g)?;
                    filter_solutions(&compute_solution_graph(&pgraph, &repo), &cli.nfr_map(), &repo)
                }
                (None, Some(s)) => read_json(s)?,
                (None, None) => unreachable!("clap requires one of the graph flags"),
            };
            let sg = resolve_operators(&sg, &repo).map_err(ServiceError::from)?;
            let selection = find_valid_selection(&sg)
                .map_err(|e| CliError::new(EXIT_NO_VALID_SELECTION, "no_valid_selection", e.to_string()))?;
            print_json(&selection);
            Ok(())
        }
        Command::Aggregate { selections, out } => {
            let repo = open_repository(cli.required(&cli.repo, "repo", REPO_ENV)?).map_err(ServiceError::from)?;
            let mut bundles = Vec::new();
            for path in selections {
                let selection: SolutionSelection = read_json(path)?;
                bundles.push(aggregate(&selection, &repo)?);
            }
            let bundle = combine_bundles(&bundles, &repo)?;
            write_bundle(&bundle, out)?;
            print_json(&bundle);
            Ok(())
        }
        Command::DeployModel { bundle, out } => {
            let repo = open_repository(cli.required(&cli.repo, "repo", REPO_ENV)?).map_err(ServiceError::from)?;
            let b = read_bundle(bundle)?;
            let model = generate_deployment_model(&b, &contributing_solutions(&b, &repo)?, &cli.nfr_map());
            match out {
                Some(path) => write_json(path, &model).map_err(|e| CliError::from(ServiceError::io(path, e)))?,
                None => print_json(&model),
            }
            Ok(())
        }
        Command::Exec { bundle, timeout_seconds, workdir, env } => {
            if !timeout_seconds.is_finite() || *timeout_seconds < 0.0 {
                return Err(CliError::input("--timeout-seconds must be a non-negative number"));
            }
            let b = read_bundle(bundle)?;
            let config = RunConfig {
                allow_execution: true,
                timeout: Duration::from_secs_f64(*timeout_seconds),
                workdir: workdir.clone(),
                env: env.iter().cloned().collect::<BTreeMap<_, _>>(),
            };
            let report = run_local(&b, &config)?;
            print_json(&report);
            Ok(())
        }
        Command::Serve { addr, session_dir } => {
            let engine = Arc::new(cli.engine()?);
            let store = SessionStore::open(session_dir.clone())?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new(EXIT_OTHER, "io_error", e.to_string()))?;
            rt.block_on(crate::http::serve(engine, store, addr))
                .map_err(|e| CliError::new(EXIT_OTHER, "io_error", e.to_string()))
        }
    }
}

/// Parses arguments, runs and reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if cli.json {
                let mut body = serde_json::json!({ "error": e.kind, "message": e.message, "exit_code": e.code });
                if let Some(d) = e.detail {
                    body["detail"] = d;
                }
                eprintln!("{body}");
            } else {
                eprintln!("pf: {}", e.message);
                if let Some(stderr) = e.detail.as_ref().and_then(|d| d.get("stderr")).and_then(|s| s.as_str()) {
                    eprint!("{stderr}");
                }
            }
            e.code
        }
    }
}
