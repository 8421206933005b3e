use std::collections::HashSet;

use log::warn;
use regex::Regex;
use serde::Deserialize;

use super::{CharSpan, NfrKey, NfrMap, RequirementSet, SubProblem};
use crate::text::tokenize;

/// A phrase that, when found in a clause, sets an NFR. The regex must define
/// a `value` group and is matched against the lowercased clause.
#[derive(Debug, Clone)]
pub struct NfrTrigger {
    pub key: NfrKey,
    pub pattern: Regex,
}

#[derive(Deserialize)]
struct LexiconDoc {
    cue_words: Vec<String>,
    unsupported: Vec<String>,
    triggers: Vec<TriggerDoc>,
}

#[derive(Deserialize)]
struct TriggerDoc {
    key: NfrKey,
    pattern: String,
}

/// Rule-based extractor used when no remote model is configured.
///
/// Pipeline: split into clauses at terminators and sequencing cue-words,
/// strip NFR trigger phrases (recording their values), tokenize what is left.
/// Clauses left without keywords are dropped.
#[derive(Debug, Clone)]
pub struct BuiltinExtractor {
    pub cue_words: Vec<String>,
    pub triggers: Vec<NfrTrigger>,
    /// Words that name NFRs outside the controlled vocabulary; they only
    /// produce a warning.
    pub unsupported: Vec<String>,
}

impl Default for BuiltinExtractor {
    fn default() -> Self {
        let doc: LexiconDoc = serde_json::from_str(include_str!("lexicon.json")).expect("bundled lexicon is valid");
        let triggers = doc
            .triggers
            .into_iter()
            .map(|t| NfrTrigger {
                key: t.key,
                pattern: Regex::new(&format!(r"\b{}", t.pattern)).expect("bundled trigger compiles"),
            })
            .collect();
        BuiltinExtractor { cue_words: doc.cue_words, triggers, unsupported: doc.unsupported }
    }
}

fn is_terminator(chars: &[char], i: usize) -> bool {
    match chars[i] {
        '!' | '?' | ';' | '\n' => true,
        '.' => chars.get(i + 1).is_none_or(|c| c.is_whitespace()),
        _ => false,
    }
}

impl BuiltinExtractor {
    /// Clause spans in character offsets, trimmed, in text order.
    pub fn split_clauses(&self, text: &str) -> Vec<CharSpan> {
        let chars: Vec<char> = text.chars().collect();
        let mut cuts: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            if is_terminator(&chars, i) {
                cuts.push((start, i));
                start = i + 1;
                i += 1;
                continue;
            }
            if chars[i].is_alphanumeric() && (i == 0 || !chars[i - 1].is_alphanumeric()) {
                let mut j = i;
                while j < chars.len() && chars[j].is_alphanumeric() {
                    j += 1;
                }
                let word: String = chars[i..j].iter().flat_map(|c| c.to_lowercase()).collect();
                if self.cue_words.iter().any(|c| *c == word) {
                    cuts.push((start, i));
                    start = j;
                }
                i = j;
                continue;
            }
            i += 1;
        }
        cuts.push((start, chars.len()));

        let trim = |c: char| c.is_whitespace() || c == ',';
        cuts.into_iter()
            .filter_map(|(mut s, mut e)| {
                while s < e && trim(chars[s]) {
                    s += 1;
                }
                while e > s && trim(chars[e - 1]) {
                    e -= 1;
                }
                (s < e).then_some(CharSpan { start: s, end: e })
            })
            .collect()
    }

    pub fn extract(&self, text: &str) -> RequirementSet {
        let mut nfrs = NfrMap::new();
        let mut subproblems = Vec::new();
        for span in self.split_clauses(text) {
            let mut clause = span.slice(text).to_lowercase();
            for trigger in &self.triggers {
                // Blank out every occurrence so the phrase does not leak into keywords.
                while let Some(caps) = trigger.pattern.captures(&clause) {
                    let whole = caps.get(0).expect("group 0");
                    if let Some(value) = caps.name("value") {
                        let value = value.as_str().to_owned();
                        match nfrs.get(&trigger.key) {
                            Some(existing) if *existing != value => {
                                warn!("conflicting {} values `{existing}` and `{value}`; keeping the first", trigger.key)
                            }
                            Some(_) => {}
                            None => {
                                nfrs.insert(trigger.key, value);
                            }
                        }
                    }
                    let range = whole.range();
                    if range.is_empty() {
                        break;
                    }
                    clause.replace_range(range.clone(), &" ".repeat(range.len()));
                }
            }
            let mut seen = HashSet::new();
            let keywords: Vec<String> = tokenize(&clause).into_iter().filter(|k| seen.insert(k.clone())).collect();
            for word in keywords.iter().filter(|k| self.unsupported.contains(k)) {
                warn!("`{word}` names a non-functional requirement outside the supported vocabulary; ignored");
            }
            if !keywords.is_empty() {
                subproblems.push(SubProblem { index: subproblems.len(), source_span: Some(span), keywords });
            }
        }
        RequirementSet { subproblems, nfrs }
    }
}
