//! Declarative deployment model: one application node plus one node per
//! distinct deployment requirement, connected by typed relations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ApplicationBundle, ComposeError};
use crate::repo::{ConcreteSolution, RequirementKind, RequirementSpec, SolutionRepository};
use crate::requirements::{NfrKey, NfrMap};

pub const DEPLOYMENT_MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Application,
    Runtime,
    Library,
    Service,
    QuantumBackend,
}

impl From<RequirementKind> for NodeKind {
    fn from(k: RequirementKind) -> Self {
        match k {
            RequirementKind::Runtime => NodeKind::Runtime,
            RequirementKind::Library => NodeKind::Library,
            RequirementKind::Service => NodeKind::Service,
            RequirementKind::QuantumBackend => NodeKind::QuantumBackend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    HostedOn,
    ConnectsTo,
    DependsOn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentNode {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentRelation {
    pub source: String,
    pub target: String,
    pub kind: RelationType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentModel {
    pub version: u32,
    pub artifact_ref: String,
    pub nodes: Vec<DeploymentNode>,
    pub relations: Vec<DeploymentRelation>,
}

impl DeploymentModel {
    pub fn application(&self) -> Option<&DeploymentNode> {
        self.nodes.iter().find(|n| n.kind == NodeKind::Application)
    }

    pub fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &DeploymentNode> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }
}

/// The repository entries of the solutions listed in the bundle manifest.
pub fn contributing_solutions<'a>(
    bundle: &ApplicationBundle,
    repo: &'a SolutionRepository,
) -> Result<Vec<&'a ConcreteSolution>, ComposeError> {
    bundle
        .manifest
        .iter()
        .map(|m| repo.solution(&m.solution).ok_or_else(|| ComposeError::UnknownSolution(m.solution.clone())))
        .collect()
}

fn relation_for(kind: RequirementKind) -> RelationType {
    match kind {
        RequirementKind::Runtime => RelationType::HostedOn,
        RequirementKind::Library => RelationType::DependsOn,
        RequirementKind::Service | RequirementKind::QuantumBackend => RelationType::ConnectsTo,
    }
}

pub fn generate_deployment_model(
    bundle: &ApplicationBundle,
    solutions: &[&ConcreteSolution],
    nfrs: &NfrMap,
) -> DeploymentModel {
    let app_name = "application".to_owned();
    let mut app_props = BTreeMap::from([("bundle".to_owned(), bundle.id.clone())]);
    if let Some(entry) = &bundle.entry {
        app_props.insert("entry".into(), entry.join(" "));
    }
    let mut nodes = vec![DeploymentNode { name: app_name.clone(), kind: NodeKind::Application, properties: app_props }];
    let mut relations = Vec::new();

    let mut seen: BTreeSet<&RequirementSpec> = BTreeSet::new();
    let mut names: BTreeSet<String> = BTreeSet::from([app_name.clone()]);
    for spec in solutions.iter().flat_map(|s| &s.deployment_requirements) {
        if !seen.insert(spec) {
            continue;
        }
        let mut name = match &spec.version_constraint {
            Some(v) => format!("{}@{v}", spec.name),
            None => spec.name.clone(),
        };
        if names.contains(&name) {
            name = format!("{name} ({})", spec.kind);
        }
        names.insert(name.clone());
        let mut properties = BTreeMap::new();
        if let Some(v) = &spec.version_constraint {
            properties.insert("version_constraint".to_owned(), v.clone());
        }
        if spec.kind == RequirementKind::QuantumBackend {
            if let Some(p) = nfrs.get(&NfrKey::Provider) {
                properties.insert("provider".to_owned(), p.clone());
            }
        }
        relations.push(DeploymentRelation { source: app_name.clone(), target: name.clone(), kind: relation_for(spec.kind) });
        nodes.push(DeploymentNode { name, kind: spec.kind.into(), properties });
    }
    DeploymentModel { version: DEPLOYMENT_MODEL_VERSION, artifact_ref: bundle.id.clone(), nodes, relations }
}
