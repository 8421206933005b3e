//! Local execution of a sealed bundle in a scratch directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{ApplicationBundle, ComposeError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    /// Nothing is spawned unless this is set.
    pub allow_execution: bool,
    pub timeout: Duration,
    /// Parent of the scratch directory; it is kept when this is set.
    pub workdir: Option<PathBuf>,
    pub env: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { allow_execution: false, timeout: Duration::from_secs(60), workdir: None, env: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub wall_time_ms: u128,
    /// Where the bundle ran, if the directory was kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workdir: Option<PathBuf>,
}

fn drain<R: Read + Send + 'static>(mut source: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = source.read_to_end(&mut buf);
        buf
    })
}

fn failed(reason: impl Into<String>) -> ComposeError {
    ComposeError::ExecutionFailed { reason: reason.into(), report: None }
}

pub fn run_local(bundle: &ApplicationBundle, config: &RunConfig) -> Result<ExecutionReport, ComposeError> {
    if !config.allow_execution {
        return Err(failed("execution is not enabled in the run configuration"));
    }
    let Some((program, args)) = bundle.entry.as_deref().and_then(|e| e.split_first()) else {
        return Err(failed("the bundle declares no entry command"));
    };
    if !bundle.sealed {
        return Err(failed("the bundle is not sealed"));
    }

    let io = |path: PathBuf| move |source| ComposeError::Io { path, source };
    let mut builder = tempfile::Builder::new();
    builder.prefix("pf-run-");
    let scratch = match &config.workdir {
        Some(parent) => {
            fs::create_dir_all(parent).map_err(io(parent.clone()))?;
            builder.tempdir_in(parent).map_err(io(parent.clone()))?
        }
        None => builder.tempdir().map_err(io(std::env::temp_dir()))?,
    };
    for (rel, content) in &bundle.files {
        let path = scratch.path().join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io(parent.to_owned()))?;
        }
        fs::write(&path, content).map_err(io(path.clone()))?;
    }

    let started = Instant::now();
    let mut child = Command::new(program)
        .args(args)
        .current_dir(scratch.path())
        .envs(&config.env)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| failed(format!("cannot start `{program}`: {e}")))?;
    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));

    let status = loop {
        if started.elapsed() >= config.timeout {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) => thread::sleep(Duration::from_millis(10)),
            Err(e) => {
                let _ = child.kill();
                return Err(failed(format!("waiting for the child failed: {e}")));
            }
        }
    };
    let wall = started.elapsed();
    let workdir = if config.workdir.is_some() { Some(scratch.keep()) } else { None };
    let report = ExecutionReport {
        exit_code: status.and_then(|s| s.code()),
        stdout: String::from_utf8_lossy(&out.join().unwrap_or_default()).into_owned(),
        stderr: String::from_utf8_lossy(&err.join().unwrap_or_default()).into_owned(),
        wall_time_ms: wall.as_millis(),
        workdir,
    };
    match status {
        None => Err(ComposeError::Timeout { seconds: config.timeout.as_secs_f64(), report: Some(Box::new(report)) }),
        Some(s) if s.success() => Ok(report),
        Some(s) => Err(ComposeError::ExecutionFailed {
            reason: format!("entry command exited with {s}"),
            report: Some(Box::new(report)),
        }),
    }
}
