//! Connector for an HTTP service (typically an LLM gateway) that returns
//! requirement sets in the wire schema
//! `{"subproblems": [{"keywords": [..]}], "nfrs": {key: value}}`.

use std::io::ErrorKind;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ExtractError, ExtractionFailure, NfrMap, RequirementSet, SubProblem};

pub const TOKEN_ENV: &str = "PF_EXTRACTOR_TOKEN";

pub const DEFAULT_PROMPT_TEMPLATE: &str = "Split the following problem description into independent sub-problems. \
For each sub-problem list the functional requirements as lowercase keywords without stopwords. \
List non-functional requirements only with the keys provider, provider_exclusion, max_runtime_class, \
privacy, region, cost_class. Answer with JSON only, exactly of the form \
{\"subproblems\": [{\"keywords\": [\"...\"]}], \"nfrs\": {\"key\": \"value\"}}.\n\nDescription:\n{{text}}\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteExtractorConfig {
    pub endpoint: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_token_env")]
    pub token_env: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// File containing the prompt; `{{text}}` is replaced by the description.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<PathBuf>,
}

fn default_token_env() -> String {
    TOKEN_ENV.to_owned()
}

fn default_timeout_ms() -> u64 {
    30_000
}

impl RemoteExtractorConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteExtractorConfig {
            endpoint: endpoint.into(),
            token_env: default_token_env(),
            timeout_ms: default_timeout_ms(),
            prompt_template: None,
        }
    }

    fn prompt(&self, text: &str) -> Result<String, ExtractError> {
        let template = match &self.prompt_template {
            Some(path) => std::fs::read_to_string(path).map_err(|e| {
                ExtractError::ExtractionFailed(ExtractionFailure::Transport(format!(
                    "cannot read prompt template {}: {e}",
                    path.display()
                )))
            })?,
            None => DEFAULT_PROMPT_TEMPLATE.to_owned(),
        };
        Ok(template.replace("{{text}}", text))
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSubProblem {
    keywords: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireResponse {
    subproblems: Vec<WireSubProblem>,
    #[serde(default)]
    nfrs: NfrMap,
}

fn is_timeout(err: &ureq::Transport) -> bool {
    let mut source = std::error::Error::source(err);
    while let Some(e) = source {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(io.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock) {
                return true;
            }
        }
        source = e.source();
    }
    err.to_string().contains("timed out")
}

pub fn remote_extract(text: &str, connector: &RemoteExtractorConfig) -> Result<RequirementSet, ExtractError> {
    let failed = |f| ExtractError::ExtractionFailed(f);
    let prompt = connector.prompt(text)?;
    let agent = ureq::AgentBuilder::new().timeout(Duration::from_millis(connector.timeout_ms)).build();
    let mut request = agent.post(&connector.endpoint);
    if let Ok(token) = std::env::var(&connector.token_env) {
        request = request.set("Authorization", &format!("Bearer {token}"));
    }
    let response = match request.send_json(WireRequest { prompt: &prompt, text }) {
        Ok(r) => r,
        Err(ureq::Error::Status(code, _)) => {
            return Err(failed(ExtractionFailure::Transport(format!("HTTP status {code}"))))
        }
        Err(ureq::Error::Transport(t)) if is_timeout(&t) => return Err(failed(ExtractionFailure::Timeout)),
        Err(ureq::Error::Transport(t)) => return Err(failed(ExtractionFailure::Transport(t.to_string()))),
    };
    let body = response.into_string().map_err(|e| {
        if matches!(e.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock) {
            failed(ExtractionFailure::Timeout)
        } else {
            failed(ExtractionFailure::Transport(e.to_string()))
        }
    })?;
    let wire: WireResponse =
        serde_json::from_str(&body).map_err(|e| failed(ExtractionFailure::Schema(e.to_string())))?;
    let set = RequirementSet {
        subproblems: wire
            .subproblems
            .into_iter()
            .enumerate()
            .map(|(index, sp)| SubProblem { index, source_span: None, keywords: sp.keywords })
            .collect(),
        nfrs: wire.nfrs,
    };
    set.check().map_err(|m| failed(ExtractionFailure::Schema(m)))?;
    Ok(set)
}
