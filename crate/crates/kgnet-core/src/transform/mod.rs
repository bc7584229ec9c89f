//! Dataset transformer: converts a task-specific subgraph into the
//! ID-encoded, split, per-type adjacency package consumed by trainers.

mod package_io;
mod split;

pub use package_io::{package_read, package_read_dir, package_write, package_write_dir};
pub use split::{split_community, split_random, SplitStrategy, Splits};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rdf::{ntriples, Term, Triple, RDF_TYPE};
use crate::sparqlml::{TaskType, TrainGmlSpec};

pub const FORMAT_VERSION: u32 = 1;

/// Synthetic node-type namespace for untyped resources and literal nodes.
pub const SYNTH_TYPE_NS: &str = "https://www.kgnet.com/types/";

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("input subgraph is empty")]
    EmptyGraph,
    #[error("target type <{0}> has no nodes in the subgraph")]
    TargetTypeAbsent(String),
    #[error("no label edges found ({0})")]
    LabelEdgesAbsent(String),
    #[error("node {0} has no rdf:type and literal/untyped conversion is disabled")]
    UntypedNode(String),
    #[error("split ratios {0:?} must be non-negative and sum to 1")]
    BadRatios((f64, f64, f64)),
    #[error("community edge type <{0}> absent from subgraph; use the random strategy instead")]
    CommunityEdgeAbsent(String),
    #[error("package io: {0}")]
    Io(String),
    #[error("package format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checksum mismatch for {0}: package is corrupt")]
    ChecksumMismatch(String),
}

/// How literal objects and untyped resources are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiteralHandling {
    /// Literals become synthetic nodes of type `Literal_<datatype>`;
    /// untyped resources become `UntypedNode`s.
    ConvertToNodes,
    /// Triples with literal objects are dropped; untyped resources error.
    Drop,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformOptions {
    pub ratios: (f64, f64, f64),
    pub strategy: SplitStrategy,
    pub literal_handling: LiteralHandling,
    pub seed: u64,
}

impl Default for TransformOptions {
    fn default() -> TransformOptions {
        TransformOptions {
            ratios: (0.8, 0.1, 0.1),
            strategy: SplitStrategy::Random,
            literal_handling: LiteralHandling::ConvertToNodes,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src_type: String,
    pub src_id: u32,
    pub dst_type: String,
    pub dst_id: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_nodes: BTreeMap<String, usize>,
    pub n_edges: BTreeMap<String, usize>,
    pub n_node_types: usize,
    pub n_edge_types: usize,
    pub n_labels: usize,
    pub total_triples: usize,
}

impl DatasetStats {
    pub fn total_nodes(&self) -> usize {
        self.n_nodes.values().sum()
    }

    pub fn total_edges(&self) -> usize {
        self.n_edges.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub kg_digest: String,
    pub task_type: TaskType,
    pub target_node_type: String,
    pub label_predicate: Option<String>,
    pub destination_node_type: Option<String>,
    pub seed: u64,
    pub strategy: String,
    pub ratios: (f64, f64, f64),
    pub multi_typed_nodes: usize,
    pub warnings: Vec<String>,
}

/// The trainer-facing dataset: per-type node maps with contiguous local
/// ids, per-edge-type adjacency, labels, and train/valid/test splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPackage {
    /// node type IRI -> node keys; local id = index into the vector.
    pub node_maps: BTreeMap<String, Vec<String>>,
    /// edge type IRI -> edges.
    pub relations: BTreeMap<String, Vec<Edge>>,
    /// (target id, label id) pairs; multi-valued for link prediction.
    pub labels: Vec<(u32, u32)>,
    /// label id -> label key (an IRI or a literal in N-Triples form).
    pub label_dict: Vec<String>,
    pub splits: Splits,
    pub stats: DatasetStats,
    pub manifest: Manifest,
}

/// Renders a term as a stable node/label key.
pub fn term_key(t: &Term) -> String {
    match t {
        Term::Iri(iri) => iri.clone(),
        other => other.to_string(),
    }
}

/// Parses a node/label key back into a term.
pub fn parse_key(key: &str) -> Result<Term, String> {
    if key.starts_with('"') || key.starts_with("_:") {
        ntriples::parse_term(key).map_err(|e| e.to_string())
    } else {
        Ok(Term::Iri(key.to_string()))
    }
}

fn datatype_local(dt: &str) -> String {
    dt.rsplit(['#', '/']).next().unwrap_or(dt).to_string()
}

fn literal_type(t: &Term) -> String {
    match t {
        Term::Literal { datatype, lang, .. } => {
            let local = if lang.is_some() {
                "langString".to_string()
            } else {
                datatype.as_deref().map(datatype_local).unwrap_or_else(|| "string".to_string())
            };
            format!("{SYNTH_TYPE_NS}Literal_{local}")
        }
        _ => unreachable!("literal_type on non-literal"),
    }
}

pub fn untyped_node_type() -> String {
    format!("{SYNTH_TYPE_NS}UntypedNode")
}

/// sha256 of the canonical N-Triples serialization.
pub fn kg_digest(kg: &BTreeSet<Triple>) -> String {
    let triples: Vec<Triple> = kg.iter().cloned().collect();
    let mut hasher = Sha256::new();
    hasher.update(ntriples::serialize(&triples).as_bytes());
    hex_string(&hasher.finalize())
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolved node types: node term -> chosen type IRI (lexicographically
/// smallest among its rdf:type objects).
fn resolve_types(kg: &BTreeSet<Triple>) -> (BTreeMap<Term, String>, usize) {
    let mut types: BTreeMap<Term, BTreeSet<String>> = BTreeMap::new();
    for t in kg {
        if t.predicate.as_iri() == Some(RDF_TYPE) {
            if let Some(class) = t.object.as_iri() {
                types.entry(t.subject.clone()).or_default().insert(class.to_string());
            }
        }
    }
    let multi = types.values().filter(|s| s.len() > 1).count();
    let chosen = types
        .into_iter()
        .map(|(node, set)| {
            let first = set.into_iter().next().unwrap();
            (node, first)
        })
        .collect();
    (chosen, multi)
}

/// Converts KG' into a dataset package. Pure in (triples, task, options):
/// identical inputs give identical packages.
pub fn transform(
    kg_prime: &BTreeSet<Triple>,
    task: &TrainGmlSpec,
    options: &TransformOptions,
) -> Result<DatasetPackage, TransformError> {
    if kg_prime.is_empty() {
        return Err(TransformError::EmptyGraph);
    }
    let (node_types, multi_typed_nodes) = resolve_types(kg_prime);
    let mut warnings = Vec::new();

    let target_type = &task.target_node_type;
    let targets: BTreeSet<&Term> = node_types
        .iter()
        .filter(|(_, ty)| *ty == target_type)
        .map(|(node, _)| node)
        .collect();
    if targets.is_empty() {
        return Err(TransformError::TargetTypeAbsent(target_type.clone()));
    }

    // label edges leave the relation set entirely
    let label_edges: Vec<&Triple> = match task.task_type {
        TaskType::NodeClassifier => {
            let label_pred = task.label_predicate.as_deref().unwrap_or_default();
            let edges: Vec<&Triple> = kg_prime
                .iter()
                .filter(|t| t.predicate.as_iri() == Some(label_pred) && targets.contains(&t.subject))
                .collect();
            if edges.is_empty() {
                return Err(TransformError::LabelEdgesAbsent(format!(
                    "no <{label_pred}> triples on target nodes"
                )));
            }
            edges
        }
        TaskType::LinkPredictor => {
            let dst_type = task.destination_node_type.as_deref().unwrap_or_default();
            let edges: Vec<&Triple> = kg_prime
                .iter()
                .filter(|t| {
                    targets.contains(&t.subject)
                        && node_types.get(&t.object).is_some_and(|ty| ty == dst_type)
                })
                .collect();
            if edges.is_empty() {
                return Err(TransformError::LabelEdgesAbsent(format!(
                    "no edges from <{target_type}> to <{dst_type}> nodes"
                )));
            }
            edges
        }
        TaskType::NodeSimilarity => Vec::new(),
    };
    let label_edge_set: BTreeSet<&Triple> = label_edges.iter().copied().collect();

    // relation triples, with literal objects converted or dropped
    let mut relation_triples: Vec<&Triple> = Vec::new();
    for t in kg_prime {
        if label_edge_set.contains(t) {
            continue;
        }
        if matches!(t.object, Term::Literal { .. })
            && options.literal_handling == LiteralHandling::Drop
        {
            continue;
        }
        relation_triples.push(t);
    }

    // node universe: every endpoint of a relation triple, plus link-
    // prediction label endpoints (their ids anchor the label dictionary)
    let mut node_universe: BTreeSet<&Term> = BTreeSet::new();
    for t in &relation_triples {
        node_universe.insert(&t.subject);
        node_universe.insert(&t.object);
    }
    if task.task_type == TaskType::LinkPredictor {
        for t in &label_edges {
            node_universe.insert(&t.subject);
            node_universe.insert(&t.object);
        }
    } else {
        for t in &label_edges {
            node_universe.insert(&t.subject);
        }
    }

    let type_of = |node: &Term| -> Result<String, TransformError> {
        if let Some(ty) = node_types.get(node) {
            return Ok(ty.clone());
        }
        match node {
            Term::Literal { .. } => Ok(literal_type(node)),
            other => {
                if options.literal_handling == LiteralHandling::ConvertToNodes {
                    Ok(untyped_node_type())
                } else {
                    Err(TransformError::UntypedNode(other.to_string()))
                }
            }
        }
    };

    // contiguous per-type ids, assigned in key order
    let mut node_maps: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut id_of: BTreeMap<&Term, (String, u32)> = BTreeMap::new();
    {
        let mut per_type: BTreeMap<String, BTreeSet<&Term>> = BTreeMap::new();
        for node in &node_universe {
            per_type.entry(type_of(node)?).or_default().insert(node);
        }
        for (ty, nodes) in per_type {
            let mut keys = Vec::with_capacity(nodes.len());
            for (i, node) in nodes.into_iter().enumerate() {
                keys.push(term_key(node));
                id_of.insert(node, (ty.clone(), i as u32));
            }
            node_maps.insert(ty, keys);
        }
    }

    let mut relations: BTreeMap<String, Vec<Edge>> = BTreeMap::new();
    for t in &relation_triples {
        let (src_type, src_id) = id_of[&t.subject].clone();
        let (dst_type, dst_id) = id_of[&t.object].clone();
        relations
            .entry(t.predicate.as_iri().unwrap_or_default().to_string())
            .or_default()
            .push(Edge {
                src_type,
                src_id,
                dst_type,
                dst_id,
            });
    }
    for edges in relations.values_mut() {
        edges.sort_by(|a, b| {
            (&a.src_type, a.src_id, &a.dst_type, a.dst_id)
                .cmp(&(&b.src_type, b.src_id, &b.dst_type, b.dst_id))
        });
        edges.dedup();
    }

    // labels
    let label_key = |t: &Triple| -> String {
        match task.task_type {
            TaskType::NodeClassifier => term_key(&t.object),
            _ => term_key(&t.object),
        }
    };
    let label_dict: Vec<String> = {
        let set: BTreeSet<String> = label_edges.iter().map(|t| label_key(t)).collect();
        set.into_iter().collect()
    };
    let label_index: BTreeMap<&str, u32> = label_dict
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i as u32))
        .collect();
    let mut labels: Vec<(u32, u32)> = label_edges
        .iter()
        .map(|t| {
            let (_, target_id) = id_of[&t.subject];
            (target_id, label_index[label_key(t).as_str()])
        })
        .collect();
    labels.sort();
    labels.dedup();

    // splits over labeled target ids
    let ratios = options.ratios;
    if !(ratios.0 >= 0.0
        && ratios.1 >= 0.0
        && ratios.2 >= 0.0
        && (ratios.0 + ratios.1 + ratios.2 - 1.0).abs() <= 1e-9)
    {
        return Err(TransformError::BadRatios(ratios));
    }
    let labeled_targets: Vec<u32> = {
        let set: BTreeSet<u32> = labels.iter().map(|(t, _)| *t).collect();
        set.into_iter().collect()
    };
    let splits = match &options.strategy {
        SplitStrategy::Random => {
            split_random(&labeled_targets, ratios, options.seed, &mut warnings)
        }
        SplitStrategy::Community { edge_type } => {
            let target_map = &node_maps[target_type];
            split_community(
                &labeled_targets,
                edge_type,
                kg_prime,
                ratios,
                |id| parse_key(&target_map[id as usize]).unwrap(),
                &mut warnings,
            )?
        }
    };

    let stats = DatasetStats {
        n_nodes: node_maps.iter().map(|(ty, v)| (ty.clone(), v.len())).collect(),
        n_edges: relations.iter().map(|(ty, v)| (ty.clone(), v.len())).collect(),
        n_node_types: node_maps.len(),
        n_edge_types: relations.len(),
        n_labels: label_dict.len(),
        total_triples: kg_prime.len(),
    };

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kg_digest: kg_digest(kg_prime),
        task_type: task.task_type,
        target_node_type: target_type.clone(),
        label_predicate: task.label_predicate.clone(),
        destination_node_type: task.destination_node_type.clone(),
        seed: options.seed,
        strategy: options.strategy.name(),
        ratios,
        multi_typed_nodes,
        warnings,
    };

    Ok(DatasetPackage {
        node_maps,
        relations,
        labels,
        label_dict,
        splits,
        stats,
        manifest,
    })
}

impl DatasetPackage {
    /// Reconstructs the relation triples (KG' minus label edges, minus or
    /// plus literal conversion). Inverse of the encoding, used by
    /// integrity checks.
    pub fn decode_triples(&self) -> Result<BTreeSet<Triple>, String> {
        let mut out = BTreeSet::new();
        for (edge_type, edges) in &self.relations {
            for e in edges {
                let s = parse_key(&self.node_maps[&e.src_type][e.src_id as usize])?;
                let o = parse_key(&self.node_maps[&e.dst_type][e.dst_id as usize])?;
                out.insert(
                    Triple::new(s, Term::iri(edge_type.clone()), o)
                        .map_err(|e| e.to_string())?,
                );
            }
        }
        Ok(out)
    }

    /// Recomputes stats from package contents.
    pub fn recompute_stats(&self) -> DatasetStats {
        DatasetStats {
            n_nodes: self.node_maps.iter().map(|(ty, v)| (ty.clone(), v.len())).collect(),
            n_edges: self.relations.iter().map(|(ty, v)| (ty.clone(), v.len())).collect(),
            n_node_types: self.node_maps.len(),
            n_edge_types: self.relations.len(),
            n_labels: self.label_dict.len(),
            total_triples: self.stats.total_triples,
        }
    }

    pub fn target_node_key(&self, id: u32) -> Option<&str> {
        self.node_maps
            .get(&self.manifest.target_node_type)
            .and_then(|v| v.get(id as usize))
            .map(String::as_str)
    }

    pub fn target_id_of(&self, key: &str) -> Option<u32> {
        self.node_maps
            .get(&self.manifest.target_node_type)?
            .iter()
            .position(|k| k == key)
            .map(|i| i as u32)
    }
}

