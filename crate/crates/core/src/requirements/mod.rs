//! Requirement extraction: free text in, per-sub-problem functional keywords
//! and a global map of non-functional requirements out.

mod builtin;
mod remote;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::is_stopword;

pub use builtin::{BuiltinExtractor, NfrTrigger};
pub use remote::{remote_extract, RemoteExtractorConfig, DEFAULT_PROMPT_TEMPLATE, TOKEN_ENV};

/// Controlled vocabulary of non-functional requirement keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NfrKey {
    Provider,
    ProviderExclusion,
    MaxRuntimeClass,
    Privacy,
    Region,
    CostClass,
}

impl NfrKey {
    pub const ALL: [NfrKey; 6] = [
        NfrKey::Provider,
        NfrKey::ProviderExclusion,
        NfrKey::MaxRuntimeClass,
        NfrKey::Privacy,
        NfrKey::Region,
        NfrKey::CostClass,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NfrKey::Provider => "provider",
            NfrKey::ProviderExclusion => "provider_exclusion",
            NfrKey::MaxRuntimeClass => "max_runtime_class",
            NfrKey::Privacy => "privacy",
            NfrKey::Region => "region",
            NfrKey::CostClass => "cost_class",
        }
    }
}

impl fmt::Display for NfrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NfrKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NfrKey::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown NFR key `{s}`"))
    }
}

/// NFR constraints, one value per key.
pub type NfrMap = BTreeMap<NfrKey, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDescription {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locale: Option<String>,
}

impl ContextDescription {
    pub fn new(text: impl Into<String>) -> Self {
        ContextDescription { text: text.into(), locale: None }
    }
}

/// Half-open range of character (not byte) offsets into the description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn slice(self, text: &str) -> String {
        text.chars().skip(self.start).take(self.end - self.start).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubProblem {
    pub index: usize,
    /// Absent when the sub-problem came from a remote extractor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_span: Option<CharSpan>,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementSet {
    pub subproblems: Vec<SubProblem>,
    #[serde(default)]
    pub nfrs: NfrMap,
}

impl RequirementSet {
    /// Checks the invariants every extractor output must satisfy.
    pub fn check(&self) -> Result<(), String> {
        if self.subproblems.is_empty() {
            return Err("no sub-problem with functional keywords".into());
        }
        let mut last_end = 0;
        for (i, sp) in self.subproblems.iter().enumerate() {
            if sp.index != i {
                return Err(format!("sub-problem {i} carries index {}", sp.index));
            }
            if sp.keywords.is_empty() {
                return Err(format!("sub-problem {i} has no keywords"));
            }
            for k in &sp.keywords {
                if k.is_empty() || k.chars().any(char::is_uppercase) || is_stopword(k) {
                    return Err(format!("keyword `{k}` is not a lowercase content word"));
                }
            }
            if let Some(span) = sp.source_span {
                if span.start < last_end || span.end < span.start {
                    return Err(format!("span of sub-problem {i} overlaps or is out of order"));
                }
                last_end = span.end;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractionFailure {
    Transport(String),
    Timeout,
    Schema(String),
}

impl fmt::Display for ExtractionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionFailure::Transport(m) => write!(f, "transport error: {m}"),
            ExtractionFailure::Timeout => write!(f, "timeout"),
            ExtractionFailure::Schema(m) => write!(f, "schema violation: {m}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("the description contains no functional requirements; please describe the problem in more detail")]
    EmptyDescription,
    #[error("requirement extraction failed ({0})")]
    ExtractionFailed(ExtractionFailure),
}

/// Which extractor turns descriptions into requirement sets.
#[derive(Debug, Clone)]
pub enum ExtractorBinding {
    Builtin(BuiltinExtractor),
    Remote(RemoteExtractorConfig),
}

impl Default for ExtractorBinding {
    fn default() -> Self {
        ExtractorBinding::Builtin(BuiltinExtractor::default())
    }
}

pub fn extract(desc: &ContextDescription, extractor: &ExtractorBinding) -> Result<RequirementSet, ExtractError> {
    if desc.text.trim().is_empty() {
        return Err(ExtractError::EmptyDescription);
    }
    match extractor {
        ExtractorBinding::Builtin(b) => {
            let set = b.extract(&desc.text);
            if set.subproblems.is_empty() {
                Err(ExtractError::EmptyDescription)
            } else {
                Ok(set)
            }
        }
        ExtractorBinding::Remote(cfg) => remote_extract(&desc.text, cfg),
    }
}

/// Deterministic extraction with the bundled English defaults.
pub fn builtin_extract(text: &str) -> RequirementSet {
    BuiltinExtractor::default().extract(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_is_empty_description() {
        let err = extract(&ContextDescription::new("   "), &ExtractorBinding::default()).unwrap_err();
        assert_eq!(err, ExtractError::EmptyDescription);
    }

    #[test]
    fn only_stopwords_is_empty_description() {
        let err = extract(&ContextDescription::new("and then the of it"), &ExtractorBinding::default()).unwrap_err();
        assert_eq!(err, ExtractError::EmptyDescription);
    }

    #[test]
    fn nfr_key_round_trips_through_str() {
        for k in NfrKey::ALL {
            assert_eq!(k.as_str().parse::<NfrKey>().unwrap(), k);
        }
        assert!("security".parse::<NfrKey>().is_err());
    }
}
