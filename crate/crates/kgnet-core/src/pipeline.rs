//! Platform glue: the sample → transform → select → train → register
//! pipeline, and dispatch of parsed queries to the trainer, the planner,
//! or the metadata governor.

use std::sync::Arc;

use thiserror::Error;

use crate::engine::{BackendError, EmbeddedBackend, SparqlBackend};
use crate::gml::{select_method, GmlError, GmlService, MethodProfile, SelectError};
use crate::kgmeta::{now_timestamp, KgMetaError, KgMetaGovernor, ModelMetadata};
use crate::planner::{CostModelParams, Objective, PlanError, Planner};
use crate::rdf::BindingTable;
use crate::sampler::{self, SamplerError, SamplingSpec};
use crate::sparqlml::{parse, ParseError, QueryKind, SparqlMlAst, TaskType, TrainGmlSpec};
use crate::transform::{transform, TransformError, TransformOptions};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("sampler: {0}")]
    Sampler(#[from] SamplerError),
    #[error("transform: {0}")]
    Transform(#[from] TransformError),
    #[error("method selection: {0}")]
    Selection(#[from] SelectError),
    #[error("training: {0}")]
    Gml(#[from] GmlError),
    #[error("metadata: {0}")]
    KgMeta(#[from] KgMetaError),
    #[error("planning: {0}")]
    Plan(#[from] PlanError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("{0}")]
    Invalid(String),
}

/// One running platform instance: the data store, the metadata governor,
/// and the training/inference service, wired together.
pub struct Platform {
    pub store: Arc<crate::rdf::Store>,
    pub data_graph: String,
    /// When set, data queries go to this backend (e.g. a remote SPARQL
    /// endpoint) instead of the embedded store.
    pub remote: Option<Box<dyn SparqlBackend>>,
    pub governor: KgMetaGovernor,
    pub gml: GmlService,
    pub profiles: Vec<MethodProfile>,
    pub embedding_dim: u32,
    pub page_size: usize,
    pub transform_options: TransformOptions,
    pub cost_params: CostModelParams,
    pub objective: Objective,
    pub lenient: bool,
}

/// What a query produced, by query kind.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutput {
    Bindings(BindingTable),
    Trained(ModelMetadata),
    Deleted(Vec<String>),
}

impl Platform {
    pub fn in_memory(data_graph: impl Into<String>) -> Platform {
        let store = Arc::new(crate::rdf::Store::new());
        Platform {
            governor: KgMetaGovernor::new(store.clone()),
            gml: GmlService::in_memory(),
            store,
            data_graph: data_graph.into(),
            remote: None,
            profiles: crate::gml::default_profiles(),
            embedding_dim: 32,
            page_size: sampler::DEFAULT_PAGE_SIZE,
            transform_options: TransformOptions::default(),
            cost_params: CostModelParams::default(),
            objective: Objective::default(),
            lenient: false,
        }
    }

    pub fn backend(&self) -> EmbeddedBackend {
        EmbeddedBackend::new(self.store.clone(), self.data_graph.clone())
    }

    /// Full training pipeline for one task; returns registered metadata.
    pub fn train(&self, task: &TrainGmlSpec) -> Result<ModelMetadata, PipelineError> {
        match &self.remote {
            Some(backend) => self.train_on(backend.as_ref(), task),
            None => self.train_on(&self.backend(), task),
        }
    }

    /// Samples KG' for the task and encodes it as a dataset package.
    pub fn build_package(
        &self,
        backend: &dyn SparqlBackend,
        task: &TrainGmlSpec,
    ) -> Result<(crate::transform::DatasetPackage, SamplingSpec), PipelineError> {
        let sampling = match task.sampling_override {
            Some((d, h)) => SamplingSpec::new(task.target_node_type.clone(), d, h)?,
            None => sampler::default_spec(task.task_type, task.target_node_type.clone()),
        };
        let mut extraction = sampler::extract_subgraph_paged(backend, &sampling, self.page_size)?;
        // link prediction needs the destination nodes' typing triples to
        // recognize label edges; hop-1 only reaches them as objects
        if let Some(dest) = &task.destination_node_type {
            let query = format!("construct {{ ?d a <{dest}> . }} where {{ ?d a <{dest}> . }}");
            extraction.triples.extend(backend.construct(&query)?);
        }
        let pkg = transform(&extraction.triples, task, &self.transform_options)?;
        Ok((pkg, sampling))
    }

    /// As `train`, but sampling from the given backend (e.g. a remote
    /// endpoint) instead of the embedded store.
    pub fn train_on(
        &self,
        backend: &dyn SparqlBackend,
        task: &TrainGmlSpec,
    ) -> Result<ModelMetadata, PipelineError> {
        let (pkg, sampling) = self.build_package(backend, task)?;

        let profile = match &task.method_override {
            Some(name) => crate::gml::profile_named(&self.profiles, name)
                .ok_or_else(|| PipelineError::Invalid(format!("unknown method {name:?}")))?,
            None => {
                let (profile, _) = select_method(
                    &self.profiles,
                    task.task_type,
                    &pkg.stats,
                    &task.budget,
                    self.embedding_dim,
                )?;
                profile
            }
        };
        let model = self.gml.train(task, &pkg, profile)?;

        let mut meta = ModelMetadata {
            model_uri: String::new(),
            task_type: task.task_type,
            target_node_type: task.target_node_type.clone(),
            label_predicate: task.label_predicate.clone(),
            source_node_type: task.source_node_type.clone(),
            destination_node_type: task.destination_node_type.clone(),
            method_name: model.method_name.clone(),
            accuracy: model.metrics.accuracy,
            inference_time_ms: model.metrics.mean_inference_ms,
            model_cardinality: model.metrics.cardinality,
            trained_on: self.data_graph.clone(),
            sampling: (sampling.direction, sampling.hops),
            artifact_ref: model.artifact_ref.clone(),
            created_at: now_timestamp(),
        };
        meta.model_uri = match self.governor.register_model(&meta) {
            Ok(uri) => uri,
            // retraining the same task: refresh the metadata in place
            Err(KgMetaError::Duplicate { existing }) => {
                self.governor.update_model(&existing, &meta)?;
                existing
            }
            Err(e) => return Err(e.into()),
        };
        Ok(meta)
    }

    /// Parses and dispatches a query by kind.
    pub fn query(&self, text: &str) -> Result<QueryOutput, PipelineError> {
        let ast = parse(text)?;
        self.dispatch(&ast)
    }

    pub fn dispatch(&self, ast: &SparqlMlAst) -> Result<QueryOutput, PipelineError> {
        match ast.kind {
            QueryKind::Select => {
                let embedded;
                let backend: &dyn SparqlBackend = match &self.remote {
                    Some(b) => b.as_ref(),
                    None => {
                        embedded = self.backend();
                        &embedded
                    }
                };
                let mut planner = Planner::new(&self.governor, backend, &self.gml);
                planner.params = self.cost_params;
                planner.objective = self.objective;
                planner.lenient = self.lenient;
                Ok(QueryOutput::Bindings(planner.execute(ast)?))
            }
            QueryKind::InsertTrain => {
                let task = ast
                    .train_payload
                    .as_ref()
                    .ok_or_else(|| PipelineError::Invalid("INSERT without TrainGML".into()))?;
                Ok(QueryOutput::Trained(self.train(task)?))
            }
            QueryKind::DeleteModel => {
                let group = ast
                    .gml_patterns
                    .first()
                    .ok_or_else(|| PipelineError::Invalid("DELETE without a model pattern".into()))?;
                let constraints = group
                    .constraints
                    .iter()
                    .map(|(k, v)| (*k, v.clone()))
                    .collect();
                let deleted =
                    self.governor
                        .delete_models(group.task_type, &constraints, &self.gml)?;
                Ok(QueryOutput::Deleted(deleted))
            }
        }
    }
}

/// `TaskType` shorthand used by CLI flags and config.
pub fn task_type_from_str(s: &str) -> Result<TaskType, String> {
    match s {
        "NodeClassifier" | "nc" => Ok(TaskType::NodeClassifier),
        "LinkPredictor" | "lp" => Ok(TaskType::LinkPredictor),
        "NodeSimilarity" | "es" => Ok(TaskType::NodeSimilarity),
        other => Err(format!("unknown task type {other:?}")),
    }
}
