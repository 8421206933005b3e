use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pattern::RelationKind;

/// One invariant violation found by a validator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyPatternId,
    DuplicatePatternId { id: String },
    MissingSection { pattern: String, section: String },
    SelfRelation { pattern: String, relation: RelationKind },
    DanglingRelation { source: String, target: String },
    DuplicateRelation { source: String, target: String, relation: RelationKind },
    EntryPointMissing { entry_point: String },
    EdgeEndpointMissing { source: String, target: String },
    UnknownPattern { id: String },
    Disconnected { unreachable: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyPatternId => write!(f, "pattern with empty id"),
            Violation::DuplicatePatternId { id } => write!(f, "duplicate pattern id `{id}`"),
            Violation::MissingSection { pattern, section } => {
                write!(f, "pattern `{pattern}` has no text in section `{section}`")
            }
            Violation::SelfRelation { pattern, relation } => {
                write!(f, "pattern `{pattern}` has a {relation} relation to itself")
            }
            Violation::DanglingRelation { source, target } => {
                write!(f, "relation `{source}` -> `{target}` references an unknown pattern")
            }
            Violation::DuplicateRelation { source, target, relation } => {
                write!(f, "relation `{source}` -{relation}-> `{target}` is stored more than once")
            }
            Violation::EntryPointMissing { entry_point } => {
                write!(f, "entry point `{entry_point}` is not a node of the graph")
            }
            Violation::EdgeEndpointMissing { source, target } => {
                write!(f, "edge `{source}` -> `{target}` has an endpoint outside the graph")
            }
            Violation::UnknownPattern { id } => write!(f, "pattern `{id}` does not exist in the language"),
            Violation::Disconnected { unreachable } => {
                write!(f, "graph is not connected; unreachable: {}", unreachable.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, violation: Violation) {
        self.entries.push(violation);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.entries.iter()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        write!(f, "{}", lines.join("; "))
    }
}
