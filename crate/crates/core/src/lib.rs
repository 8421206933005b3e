//! Pattern-based assembly of applications from a textual problem description.
//!
//! The crate follows the phases of the method one module at a time:
//!
//! * [`requirements`] splits a description into sub-problems with functional
//!   keywords and extracts non-functional requirements (NFRs).
//! * [`matcher`] ranks entry-point patterns by TF-IDF cosine similarity.
//! * [`graph`] expands an entry point into a pattern graph and applies user edits.
//! * [`repo`] stores concrete solutions, their policies and aggregation operators.
//! * [`solver`] builds and filters the solution graph and selects one solution per pattern.
//! * [`compose`] splices the selected solutions into a bundle, derives the
//!   deployment model and runs the bundle locally.

pub mod compose;
pub mod graph;
pub mod matcher;
pub mod pattern;
pub mod repo;
pub mod requirements;
pub mod solver;
pub mod text;
pub mod util;
pub mod validation;

pub use pattern::{Pattern, PatternLanguage, PatternRelation, RelationKind};
pub use requirements::{NfrKey, NfrMap, RequirementSet, SubProblem};
pub use validation::{ValidationReport, Violation};
