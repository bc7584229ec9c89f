//! Baseline model trainers over dataset packages, and the serialized
//! model artifacts they produce.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sparqlml::{TaskType, TrainGmlSpec};
use crate::transform::DatasetPackage;

use super::GmlError;

/// Fully serialized trained model: enough state to answer any inference
/// request deterministically, across process restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub artifact_ref: String,
    pub method_name: String,
    pub task_type: TaskType,
    pub target_node_type: String,
    /// Target node keys; local id = index.
    pub node_map: Vec<String>,
    /// Label keys (NC: class IRIs/literals; LP: destination node IRIs).
    pub label_dict: Vec<String>,
    pub state: ModelState,
    pub metrics: ModelMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    /// NC: test accuracy; LP: Hits@10; similarity: 1.0 by construction.
    pub accuracy: f64,
    /// Mean per-call latency over the evaluation pass, warm.
    pub mean_inference_ms: f64,
    /// Distinct target nodes the model can predict for.
    pub cardinality: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelState {
    /// Constant prediction: the most frequent training label.
    Majority { label_id: u32 },
    /// Per-target label id, precomputed from training-neighbor votes.
    NeighborVote { predictions: Vec<u32> },
    /// Graph snapshot for common-neighbor ranking. `neighbors` is indexed
    /// by global node id; targets occupy `source_offset..+node_map.len()`.
    CommonNeighbors {
        neighbors: Vec<Vec<u32>>,
        source_offset: u32,
        /// Global node id per label-dict entry (candidate destinations).
        dest_globals: Vec<u32>,
        adamic_adar: bool,
    },
    /// Embedding store: one vector per node_map entry.
    Embeddings { dimension: usize, vectors: Vec<Vec<f64>> },
}

/// Global node indexing over a package: every node of every type gets one
/// id; adjacency ignores edge types and direction.
struct GraphIndex {
    offsets: BTreeMap<String, u32>,
    index: BTreeMap<String, u32>,
    neighbors: Vec<BTreeSet<u32>>,
}

impl GraphIndex {
    fn build(pkg: &DatasetPackage) -> GraphIndex {
        let mut offsets = BTreeMap::new();
        let mut index = BTreeMap::new();
        let mut total = 0u32;
        for (ty, keys) in &pkg.node_maps {
            offsets.insert(ty.clone(), total);
            for (i, key) in keys.iter().enumerate() {
                index.insert(key.clone(), total + i as u32);
            }
            total += keys.len() as u32;
        }
        let mut neighbors = vec![BTreeSet::new(); total as usize];
        for edges in pkg.relations.values() {
            for e in edges {
                let s = offsets[&e.src_type] + e.src_id;
                let d = offsets[&e.dst_type] + e.dst_id;
                if s != d {
                    neighbors[s as usize].insert(d);
                    neighbors[d as usize].insert(s);
                }
            }
        }
        GraphIndex {
            offsets,
            index,
            neighbors,
        }
    }
}

/// One label per target: the smallest label id among its rows.
fn assigned_labels(pkg: &DatasetPackage) -> BTreeMap<u32, u32> {
    let mut out = BTreeMap::new();
    for (t, l) in &pkg.labels {
        out.entry(*t).or_insert(*l);
    }
    out
}

fn majority_label(train_labels: &BTreeMap<u32, u32>) -> u32 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for l in train_labels.values() {
        *counts.entry(*l).or_default() += 1;
    }
    // iterate in label-id order so ties go to the smallest label key
    counts
        .iter()
        .max_by_key(|(id, n)| (**n, std::cmp::Reverse(**id)))
        .map(|(id, _)| *id)
        .expect("non-empty training labels")
}

fn stable_ref(task: &TrainGmlSpec, pkg: &DatasetPackage, method: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(method.as_bytes());
    hasher.update([0]);
    hasher.update(format!("{:?}", task.task_type).as_bytes());
    hasher.update([0]);
    hasher.update(task.target_node_type.as_bytes());
    hasher.update([0]);
    hasher.update(task.label_predicate.as_deref().unwrap_or("").as_bytes());
    hasher.update([0]);
    hasher.update(task.destination_node_type.as_deref().unwrap_or("").as_bytes());
    hasher.update([0]);
    hasher.update(pkg.manifest.kg_digest.as_bytes());
    let hex = crate::transform::hex_string(&hasher.finalize());
    format!("{method}-{}", &hex[..12])
}

/// Trains the named baseline and evaluates it on the test split. Targets
/// without a test split (tiny packages) are evaluated on all labeled ids.
pub fn train(
    task: &TrainGmlSpec,
    pkg: &DatasetPackage,
    method: &str,
) -> Result<TrainedModel, GmlError> {
    let node_map = pkg
        .node_maps
        .get(&task.target_node_type)
        .cloned()
        .ok_or_else(|| GmlError::TargetTypeAbsent(task.target_node_type.clone()))?;
    if pkg.splits.train.is_empty() {
        return Err(GmlError::EmptyTrainSplit);
    }
    let eval_ids: Vec<u32> = if pkg.splits.test.is_empty() {
        assigned_labels(pkg).keys().copied().collect()
    } else {
        pkg.splits.test.iter().copied().collect()
    };

    match method {
        "majority-label" => train_majority(task, pkg, node_map, &eval_ids),
        "neighbor-label-frequency" => train_neighbor_vote(task, pkg, node_map, &eval_ids),
        "common-neighbors" => train_common_neighbors(task, pkg, node_map, &eval_ids),
        "embedding-similarity" => train_embeddings(task, pkg, node_map),
        other => Err(GmlError::UnknownMethod(other.to_string())),
    }
}

fn finish_nc(
    task: &TrainGmlSpec,
    pkg: &DatasetPackage,
    node_map: Vec<String>,
    eval_ids: &[u32],
    method: &str,
    state: ModelState,
    predict: impl Fn(u32) -> u32,
) -> Result<TrainedModel, GmlError> {
    if pkg.label_dict.len() < 2 {
        return Err(GmlError::LabelDictTooSmall(pkg.label_dict.len()));
    }
    let truth = assigned_labels(pkg);
    let started = Instant::now();
    let correct = eval_ids
        .iter()
        .filter(|id| truth.get(id) == Some(&predict(**id)))
        .count();
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let accuracy = if eval_ids.is_empty() {
        0.0
    } else {
        correct as f64 / eval_ids.len() as f64
    };
    let cardinality = node_map.len() as u64;
    Ok(TrainedModel {
        artifact_ref: stable_ref(task, pkg, method),
        method_name: method.to_string(),
        task_type: task.task_type,
        target_node_type: task.target_node_type.clone(),
        node_map,
        label_dict: pkg.label_dict.clone(),
        state,
        metrics: ModelMetrics {
            accuracy,
            mean_inference_ms: mean_ms(elapsed_ms, eval_ids.len()),
            cardinality,
        },
    })
}

fn mean_ms(total_ms: f64, calls: usize) -> f64 {
    if calls == 0 {
        0.001
    } else {
        (total_ms / calls as f64).max(0.001)
    }
}

fn train_majority(
    task: &TrainGmlSpec,
    pkg: &DatasetPackage,
    node_map: Vec<String>,
    eval_ids: &[u32],
) -> Result<TrainedModel, GmlError> {
    let truth = assigned_labels(pkg);
    let train_labels: BTreeMap<u32, u32> = truth
        .iter()
        .filter(|(id, _)| pkg.splits.train.contains(id))
        .map(|(id, l)| (*id, *l))
        .collect();
    if train_labels.is_empty() {
        return Err(GmlError::EmptyTrainSplit);
    }
    let label_id = majority_label(&train_labels);
    finish_nc(
        task,
        pkg,
        node_map,
        eval_ids,
        "majority-label",
        ModelState::Majority { label_id },
        |_| label_id,
    )
}

fn train_neighbor_vote(
    task: &TrainGmlSpec,
    pkg: &DatasetPackage,
    node_map: Vec<String>,
    eval_ids: &[u32],
) -> Result<TrainedModel, GmlError> {
    let truth = assigned_labels(pkg);
    let train_labels: BTreeMap<u32, u32> = truth
        .iter()
        .filter(|(id, _)| pkg.splits.train.contains(id))
        .map(|(id, l)| (*id, *l))
        .collect();
    if train_labels.is_empty() {
        return Err(GmlError::EmptyTrainSplit);
    }
    let fallback = majority_label(&train_labels);

    let graph = GraphIndex::build(pkg);
    let offset = graph.offsets[&task.target_node_type];
    // label of a global node id, when it is a target with a train label
    let global_train_label = |g: u32| -> Option<u32> {
        let local = g.checked_sub(offset)?;
        if (local as usize) < node_map.len() {
            train_labels.get(&local).copied()
        } else {
            None
        }
    };
    let predictions: Vec<u32> = (0..node_map.len() as u32)
        .map(|id| {
            let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
            for &nb in &graph.neighbors[(offset + id) as usize] {
                if let Some(l) = global_train_label(nb) {
                    *votes.entry(l).or_default() += 1;
                }
            }
            votes
                .iter()
                .max_by_key(|(l, n)| (**n, std::cmp::Reverse(**l)))
                .map(|(l, _)| *l)
                .unwrap_or(fallback)
        })
        .collect();
    let by_id = predictions.clone();
    finish_nc(
        task,
        pkg,
        node_map,
        eval_ids,
        "neighbor-label-frequency",
        ModelState::NeighborVote { predictions },
        move |id| by_id[id as usize],
    )
}

/// Ranks candidate destinations for a source by common-neighbor count in
/// the snapshot graph. Ties break toward the smaller destination key.
pub fn rank_destinations(
    neighbors: &[Vec<u32>],
    source_global: u32,
    dest_globals: &[u32],
    adamic_adar: bool,
    k: usize,
) -> Vec<u32> {
    let gs: BTreeSet<u32> = neighbors[source_global as usize].iter().copied().collect();
    let mut scored: Vec<(f64, u32)> = dest_globals
        .iter()
        .enumerate()
        .map(|(label_id, &dg)| {
            let score: f64 = neighbors[dg as usize]
                .iter()
                .filter(|n| gs.contains(n))
                .map(|&n| {
                    if adamic_adar {
                        let deg = neighbors[n as usize].len() as f64;
                        if deg > 1.0 {
                            1.0 / deg.ln()
                        } else {
                            0.0
                        }
                    } else {
                        1.0
                    }
                })
                .sum();
            (score, label_id as u32)
        })
        .collect();
    scored.sort_by(|(sa, ia), (sb, ib)| {
        sb.partial_cmp(sa).unwrap().then(ia.cmp(ib))
    });
    scored.into_iter().take(k).map(|(_, id)| id).collect()
}

fn train_common_neighbors(
    task: &TrainGmlSpec,
    pkg: &DatasetPackage,
    node_map: Vec<String>,
    eval_ids: &[u32],
) -> Result<TrainedModel, GmlError> {
    if pkg.label_dict.len() < 2 {
        return Err(GmlError::LabelDictTooSmall(pkg.label_dict.len()));
    }
    let graph = GraphIndex::build(pkg);
    let offset = graph.offsets[&task.target_node_type];
    let dest_globals: Vec<u32> = pkg
        .label_dict
        .iter()
        .map(|key| {
            graph
                .index
                .get(key)
                .copied()
                .ok_or_else(|| GmlError::UnknownNode(key.clone()))
        })
        .collect::<Result<_, _>>()?;

    // the model graph = package relations + training label edges
    let mut neighbors: Vec<BTreeSet<u32>> = graph.neighbors;
    let mut train_edges = 0usize;
    for (t, l) in &pkg.labels {
        if pkg.splits.train.contains(t) {
            let s = offset + t;
            let d = dest_globals[*l as usize];
            neighbors[s as usize].insert(d);
            neighbors[d as usize].insert(s);
            train_edges += 1;
        }
    }
    if train_edges == 0 {
        return Err(GmlError::EmptyTrainSplit);
    }
    let neighbors: Vec<Vec<u32>> = neighbors
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect();

    // Hits@10 over held-out (source, destination) pairs
    let test_pairs: Vec<(u32, u32)> = pkg
        .labels
        .iter()
        .filter(|(t, _)| eval_ids.contains(t))
        .copied()
        .collect();
    let started = Instant::now();
    let hits = test_pairs
        .iter()
        .filter(|(s, l)| {
            rank_destinations(&neighbors, offset + s, &dest_globals, false, 10).contains(l)
        })
        .count();
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let accuracy = if test_pairs.is_empty() {
        0.0
    } else {
        hits as f64 / test_pairs.len() as f64
    };
    let cardinality = node_map.len() as u64;
    Ok(TrainedModel {
        artifact_ref: stable_ref(task, pkg, "common-neighbors"),
        method_name: "common-neighbors".into(),
        task_type: task.task_type,
        target_node_type: task.target_node_type.clone(),
        node_map,
        label_dict: pkg.label_dict.clone(),
        state: ModelState::CommonNeighbors {
            neighbors,
            source_offset: offset,
            dest_globals,
            adamic_adar: false,
        },
        metrics: ModelMetrics {
            accuracy,
            mean_inference_ms: mean_ms(elapsed_ms, test_pairs.len()),
            cardinality,
        },
    })
}

fn train_embeddings(
    task: &TrainGmlSpec,
    pkg: &DatasetPackage,
    node_map: Vec<String>,
) -> Result<TrainedModel, GmlError> {
    let dimension = pkg.relations.len();
    if dimension == 0 {
        return Err(GmlError::EmptyTrainSplit);
    }
    // structural embedding: per-edge-type degree (both directions),
    // L2-normalized — deterministic and restart-stable
    let vectors: Vec<Vec<f64>> = (0..node_map.len() as u32)
        .map(|id| {
            let mut v = vec![0.0f64; dimension];
            for (axis, edges) in pkg.relations.values().enumerate() {
                for e in edges {
                    if e.src_type == task.target_node_type && e.src_id == id {
                        v[axis] += 1.0;
                    }
                    if e.dst_type == task.target_node_type && e.dst_id == id {
                        v[axis] += 1.0;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in &mut v {
                    *x /= norm;
                }
            }
            v
        })
        .collect();
    let cardinality = vectors.len() as u64;
    Ok(TrainedModel {
        artifact_ref: stable_ref(task, pkg, "embedding-similarity"),
        method_name: "embedding-similarity".into(),
        task_type: task.task_type,
        target_node_type: task.target_node_type.clone(),
        node_map,
        label_dict: Vec::new(),
        state: ModelState::Embeddings { dimension, vectors },
        metrics: ModelMetrics {
            accuracy: 1.0,
            mean_inference_ms: 0.001,
            cardinality,
        },
    })
}

impl TrainedModel {
    pub fn target_id(&self, key: &str) -> Option<u32> {
        self.node_map.iter().position(|k| k == key).map(|i| i as u32)
    }

    /// NC: label key for a target id.
    pub fn predict_label(&self, id: u32) -> Option<&str> {
        let label_id = match &self.state {
            ModelState::Majority { label_id } => *label_id,
            ModelState::NeighborVote { predictions } => *predictions.get(id as usize)?,
            _ => return None,
        };
        self.label_dict.get(label_id as usize).map(String::as_str)
    }

    /// LP: top-k destination keys for a source id, strictly ordered.
    pub fn predict_links(&self, id: u32, k: usize) -> Option<Vec<&str>> {
        match &self.state {
            ModelState::CommonNeighbors {
                neighbors,
                source_offset,
                dest_globals,
                adamic_adar,
            } => {
                if (id as usize) >= self.node_map.len() {
                    return None;
                }
                let ranked =
                    rank_destinations(neighbors, source_offset + id, dest_globals, *adamic_adar, k);
                Some(
                    ranked
                        .into_iter()
                        .map(|l| self.label_dict[l as usize].as_str())
                        .collect(),
                )
            }
            _ => None,
        }
    }
}
