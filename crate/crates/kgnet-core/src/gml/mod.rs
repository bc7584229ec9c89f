//! GML service core: budgeted method selection, baseline training,
//! inference, the embedding store, and the artifact registry.

mod embed;
mod profile;
mod trainers;

pub use embed::EmbeddingStore;
pub use profile::{
    default_profiles, estimate_cost, profile_named, select_method, CostEstimate, CostModelConfig,
    Family, MethodProfile, SelectError,
};
pub use trainers::{rank_destinations, train, ModelMetrics, ModelState, TrainedModel};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparqlml::TrainGmlSpec;
use crate::transform::DatasetPackage;

#[derive(Debug, Error)]
pub enum GmlError {
    #[error("target type <{0}> not present in the dataset package")]
    TargetTypeAbsent(String),
    #[error("training split is empty")]
    EmptyTrainSplit,
    #[error("label dictionary has {0} entries; need at least 2")]
    LabelDictTooSmall(usize),
    #[error("unknown training method {0:?}")]
    UnknownMethod(String),
    #[error("method {method:?} does not support {task:?}")]
    UnsupportedTask { method: String, task: String },
    #[error("unknown model artifact {0:?}")]
    UnknownArtifact(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("model {artifact:?} does not serve {operation} requests")]
    WrongModelKind { artifact: String, operation: String },
    #[error("vector dimension {found}, store dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("query vector is all zeros")]
    ZeroVector,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("artifact storage: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodeClassResponse {
    /// target IRI -> predicted label key.
    pub predictions: BTreeMap<String, String>,
    /// targets unknown to the model (per-item, not a global failure).
    pub unresolved: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkResponse {
    /// source IRI -> strictly ordered top-k destination keys.
    pub predictions: BTreeMap<String, Vec<String>>,
    pub unresolved: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KnnQuery {
    Node(String),
    Vector(Vec<f64>),
}

/// Model registry and inference front end. With a storage directory,
/// artifacts persist as JSON files and reload on startup.
pub struct GmlService {
    dir: Option<PathBuf>,
    models: RwLock<BTreeMap<String, Arc<TrainedModel>>>,
    train_lock: Mutex<()>,
}

impl GmlService {
    pub fn in_memory() -> GmlService {
        GmlService {
            dir: None,
            models: RwLock::new(BTreeMap::new()),
            train_lock: Mutex::new(()),
        }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<GmlService, GmlError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| GmlError::Io(e.to_string()))?;
        let mut models = BTreeMap::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| GmlError::Io(e.to_string()))? {
            let entry = entry.map_err(|e| GmlError::Io(e.to_string()))?;
            if entry.path().extension().is_some_and(|e| e == "json") {
                let data =
                    std::fs::read(entry.path()).map_err(|e| GmlError::Io(e.to_string()))?;
                let model: TrainedModel =
                    serde_json::from_slice(&data).map_err(|e| GmlError::Io(e.to_string()))?;
                models.insert(model.artifact_ref.clone(), Arc::new(model));
            }
        }
        Ok(GmlService {
            dir: Some(dir),
            models: RwLock::new(models),
            train_lock: Mutex::new(()),
        })
    }

    /// Trains with the given method profile and registers the artifact.
    /// Training runs serialized; a retrain of the same task replaces the
    /// artifact in place (same stable ref).
    pub fn train(
        &self,
        task: &TrainGmlSpec,
        pkg: &DatasetPackage,
        method: &MethodProfile,
    ) -> Result<Arc<TrainedModel>, GmlError> {
        if !method.supports(task.task_type) {
            return Err(GmlError::UnsupportedTask {
                method: method.name.clone(),
                task: format!("{:?}", task.task_type),
            });
        }
        let _guard = self.train_lock.lock().unwrap();
        let model = Arc::new(trainers::train(task, pkg, &method.name)?);
        self.persist(&model)?;
        self.models
            .write()
            .unwrap()
            .insert(model.artifact_ref.clone(), model.clone());
        Ok(model)
    }

    fn persist(&self, model: &TrainedModel) -> Result<(), GmlError> {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.json", model.artifact_ref));
            let data = serde_json::to_vec_pretty(model).map_err(|e| GmlError::Io(e.to_string()))?;
            std::fs::write(path, data).map_err(|e| GmlError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn get(&self, artifact_ref: &str) -> Result<Arc<TrainedModel>, GmlError> {
        self.models
            .read()
            .unwrap()
            .get(artifact_ref)
            .cloned()
            .ok_or_else(|| GmlError::UnknownArtifact(artifact_ref.to_string()))
    }

    pub fn list(&self) -> Vec<Arc<TrainedModel>> {
        self.models.read().unwrap().values().cloned().collect()
    }

    /// Removes the artifact and its embeddings; a second call reports
    /// the ref as unknown.
    pub fn delete_artifact(&self, artifact_ref: &str) -> Result<(), GmlError> {
        let removed = self.models.write().unwrap().remove(artifact_ref);
        if removed.is_none() {
            return Err(GmlError::UnknownArtifact(artifact_ref.to_string()));
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{artifact_ref}.json"));
            if path.exists() {
                std::fs::remove_file(path).map_err(|e| GmlError::Io(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn infer_node_class(
        &self,
        artifact_ref: &str,
        targets: &[String],
    ) -> Result<NodeClassResponse, GmlError> {
        let model = self.get(artifact_ref)?;
        if !matches!(
            model.state,
            ModelState::Majority { .. } | ModelState::NeighborVote { .. }
        ) {
            return Err(GmlError::WrongModelKind {
                artifact: artifact_ref.to_string(),
                operation: "node-classification".into(),
            });
        }
        let mut out = NodeClassResponse::default();
        for target in targets {
            match model.target_id(target).and_then(|id| model.predict_label(id)) {
                Some(label) => {
                    out.predictions.insert(target.clone(), label.to_string());
                }
                None => out.unresolved.push(target.clone()),
            }
        }
        Ok(out)
    }

    pub fn infer_links(
        &self,
        artifact_ref: &str,
        sources: &[String],
        k: usize,
    ) -> Result<LinkResponse, GmlError> {
        if k == 0 {
            return Err(GmlError::InvalidArgument("k must be at least 1".into()));
        }
        let model = self.get(artifact_ref)?;
        if !matches!(model.state, ModelState::CommonNeighbors { .. }) {
            return Err(GmlError::WrongModelKind {
                artifact: artifact_ref.to_string(),
                operation: "link-prediction".into(),
            });
        }
        let mut out = LinkResponse::default();
        for source in sources {
            match model
                .target_id(source)
                .and_then(|id| model.predict_links(id, k))
            {
                Some(links) => {
                    out.predictions
                        .insert(source.clone(), links.iter().map(|s| s.to_string()).collect());
                }
                None => out.unresolved.push(source.clone()),
            }
        }
        Ok(out)
    }

    pub fn knn(
        &self,
        artifact_ref: &str,
        query: &KnnQuery,
        k: usize,
    ) -> Result<Vec<(String, f64)>, GmlError> {
        let model = self.get(artifact_ref)?;
        let store = model.embedding_store().ok_or_else(|| GmlError::WrongModelKind {
            artifact: artifact_ref.to_string(),
            operation: "similarity".into(),
        })?;
        match query {
            KnnQuery::Node(key) => store.knn_node(key, k),
            KnnQuery::Vector(v) => store.knn_vector(v, k, None),
        }
    }

    /// Number of embedding entries held by the model, if it has any.
    pub fn embedding_count(&self, artifact_ref: &str) -> Result<usize, GmlError> {
        let model = self.get(artifact_ref)?;
        Ok(model.embedding_store().map(|s| s.len()).unwrap_or(0))
    }
}

impl TrainedModel {
    /// View of an embedding-similarity model as a similarity store.
    pub fn embedding_store(&self) -> Option<EmbeddingStore> {
        match &self.state {
            ModelState::Embeddings { dimension, vectors } => {
                let mut store = EmbeddingStore::new(*dimension);
                for (key, v) in self.node_map.iter().zip(vectors) {
                    store.entries.insert(key.clone(), v.clone());
                }
                Some(store)
            }
            _ => None,
        }
    }
}
