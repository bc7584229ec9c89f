//! Training-method profiles, cost estimation, and budget-driven method
//! selection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparqlml::{Budget, TaskType};
use crate::transform::DatasetStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Materializes the whole graph per step; cheaper per epoch, more memory.
    FullBatch,
    /// Works on sampled batches; the memory model scales node/edge terms by
    /// the batch fraction.
    MiniBatchSampling,
}

/// A registered training method plus its cost-model coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodProfile {
    pub name: String,
    pub family: Family,
    pub tasks: BTreeSet<TaskType>,
    /// Bytes independent of dataset size.
    pub alpha_fixed_bytes: f64,
    /// Bytes per node per embedding dimension.
    pub alpha_node_bytes: f64,
    /// Bytes per edge.
    pub alpha_edge_bytes: f64,
    /// Seconds per edge per epoch.
    pub beta_edge_seconds: f64,
    /// Seconds per node per epoch.
    pub beta_node_seconds: f64,
    pub default_epochs: u32,
    /// Fraction of the graph touched per batch; 1.0 for full-batch methods.
    pub batch_fraction: f64,
    /// Ordinal expected-quality rank; higher is preferred.
    pub quality_prior: u32,
}

impl MethodProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.tasks.is_empty() {
            return Err(format!("method {} supports no tasks", self.name));
        }
        let coeffs = [
            self.alpha_fixed_bytes,
            self.alpha_node_bytes,
            self.alpha_edge_bytes,
            self.beta_edge_seconds,
            self.beta_node_seconds,
            self.batch_fraction,
        ];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(format!("method {} has a negative coefficient", self.name));
        }
        if !(0.0..=1.0).contains(&self.batch_fraction) {
            return Err(format!("method {} batch fraction outside [0,1]", self.name));
        }
        Ok(())
    }

    pub fn supports(&self, task: TaskType) -> bool {
        self.tasks.contains(&task)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub memory_bytes: u64,
    pub time_seconds: f64,
}

/// memory = α_fixed + f·(α_nodes·Σ|V|·dim + α_edges·Σ|E|), where the batch
/// fraction f is 1 for full-batch methods; time = epochs·(β_edge·Σ|E| +
/// β_node·Σ|V|).
pub fn estimate_cost(
    profile: &MethodProfile,
    stats: &DatasetStats,
    dim: u32,
    epochs: u32,
) -> CostEstimate {
    let nodes = stats.total_nodes() as f64;
    let edges = stats.total_edges() as f64;
    let fraction = match profile.family {
        Family::FullBatch => 1.0,
        Family::MiniBatchSampling => profile.batch_fraction,
    };
    let memory = profile.alpha_fixed_bytes
        + fraction * (profile.alpha_node_bytes * nodes * dim as f64 + profile.alpha_edge_bytes * edges);
    let time =
        epochs as f64 * (profile.beta_edge_seconds * edges + profile.beta_node_seconds * nodes);
    CostEstimate {
        memory_bytes: memory.ceil() as u64,
        time_seconds: time,
    }
}

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("no registered method supports {0:?}")]
    NoMethodForTask(TaskType),
    #[error("no method fits the budget:\n{0}")]
    BudgetInfeasible(String),
}

/// Picks the best in-budget method: highest quality prior, then lower
/// estimated time, then lower memory, then name — a total order.
pub fn select_method<'a>(
    profiles: &'a [MethodProfile],
    task: TaskType,
    stats: &DatasetStats,
    budget: &Budget,
    dim: u32,
) -> Result<(&'a MethodProfile, CostEstimate), SelectError> {
    let supported: Vec<&MethodProfile> =
        profiles.iter().filter(|p| p.supports(task)).collect();
    if supported.is_empty() {
        return Err(SelectError::NoMethodForTask(task));
    }
    let mut best: Option<(&MethodProfile, CostEstimate)> = None;
    let mut overruns = Vec::new();
    for p in supported {
        let est = estimate_cost(p, stats, dim, p.default_epochs);
        if est.memory_bytes > budget.max_memory_bytes
            || est.time_seconds > budget.max_time_seconds as f64
        {
            overruns.push(format!(
                "  {}: memory {}B (max {}B), time {:.3}s (max {}s)",
                p.name,
                est.memory_bytes,
                budget.max_memory_bytes,
                est.time_seconds,
                budget.max_time_seconds
            ));
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, b_est)) => {
                p.quality_prior
                    .cmp(&b.quality_prior)
                    // lower time, then lower memory, then smaller name wins
                    .then(b_est.time_seconds.partial_cmp(&est.time_seconds).unwrap())
                    .then(b_est.memory_bytes.cmp(&est.memory_bytes))
                    .then(b.name.cmp(&p.name))
                    .is_gt()
            }
        };
        if better {
            best = Some((p, est));
        }
    }
    best.ok_or_else(|| SelectError::BudgetInfeasible(overruns.join("\n")))
}

/// Cost-model parameters as shipped in a config file. The defaults are
/// documented starting points, calibratable per deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModelConfig {
    /// Embedding dimension assumed by the memory model.
    pub dim: u32,
    pub profiles: Vec<MethodProfile>,
}

impl Default for CostModelConfig {
    fn default() -> CostModelConfig {
        CostModelConfig {
            dim: 64,
            profiles: default_profiles(),
        }
    }
}

impl CostModelConfig {
    pub fn from_json(text: &str) -> Result<CostModelConfig, String> {
        let cfg: CostModelConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        for p in &cfg.profiles {
            p.validate()?;
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

const MIB: f64 = (1u64 << 20) as f64;

/// The built-in baseline methods and their default coefficients.
pub fn default_profiles() -> Vec<MethodProfile> {
    vec![
        MethodProfile {
            name: "majority-label".into(),
            family: Family::FullBatch,
            tasks: [TaskType::NodeClassifier].into(),
            alpha_fixed_bytes: 16.0 * MIB,
            alpha_node_bytes: 4.0,
            alpha_edge_bytes: 0.0,
            beta_edge_seconds: 0.0,
            beta_node_seconds: 1e-7,
            default_epochs: 1,
            batch_fraction: 1.0,
            quality_prior: 1,
        },
        MethodProfile {
            name: "neighbor-label-frequency".into(),
            family: Family::MiniBatchSampling,
            tasks: [TaskType::NodeClassifier].into(),
            alpha_fixed_bytes: 32.0 * MIB,
            alpha_node_bytes: 8.0,
            alpha_edge_bytes: 16.0,
            beta_edge_seconds: 2e-6,
            beta_node_seconds: 1e-6,
            default_epochs: 10,
            batch_fraction: 0.2,
            quality_prior: 2,
        },
        MethodProfile {
            name: "common-neighbors".into(),
            family: Family::FullBatch,
            tasks: [TaskType::LinkPredictor].into(),
            alpha_fixed_bytes: 32.0 * MIB,
            alpha_node_bytes: 8.0,
            alpha_edge_bytes: 24.0,
            beta_edge_seconds: 3e-6,
            beta_node_seconds: 1e-6,
            default_epochs: 1,
            batch_fraction: 1.0,
            quality_prior: 2,
        },
        MethodProfile {
            name: "embedding-similarity".into(),
            family: Family::MiniBatchSampling,
            tasks: [TaskType::NodeSimilarity].into(),
            alpha_fixed_bytes: 16.0 * MIB,
            alpha_node_bytes: 8.0,
            alpha_edge_bytes: 8.0,
            beta_edge_seconds: 1e-6,
            beta_node_seconds: 2e-6,
            default_epochs: 5,
            batch_fraction: 0.5,
            quality_prior: 1,
        },
    ]
}

pub fn profile_named<'a>(profiles: &'a [MethodProfile], name: &str) -> Option<&'a MethodProfile> {
    profiles.iter().find(|p| p.name == name)
}
