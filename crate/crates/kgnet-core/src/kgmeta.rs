//! KGMeta governor: the RDF graph of trained-model metadata, with
//! register / lookup / delete lifecycle operations.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rdf::{ntriples, Store, Term, Triple, TriplePattern, KGNET_NS, RDF_TYPE};
use crate::sparqlml::{ConstraintKey, TaskType};

/// Named graph holding the model metadata.
pub const KGMETA_GRAPH: &str = KGNET_NS;

const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

#[derive(Debug, Error)]
pub enum KgMetaError {
    #[error("model already registered as <{existing}>")]
    Duplicate { existing: String },
    #[error("invalid metadata: {0}")]
    Invalid(String),
    #[error("metadata graph: {0}")]
    Backend(String),
    #[error("artifact deletion failed for {artifact}: {reason}; no metadata was removed")]
    ArtifactDelete { artifact: String, reason: String },
    #[error("model <{uri}> is missing {field}")]
    MissingField { uri: String, field: String },
    #[error("no model registered at <{0}>")]
    NotFound(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// Minted at registration; empty on input.
    #[serde(default)]
    pub model_uri: String,
    pub task_type: TaskType,
    pub target_node_type: String,
    pub label_predicate: Option<String>,
    pub source_node_type: Option<String>,
    pub destination_node_type: Option<String>,
    pub method_name: String,
    /// NC: test accuracy; LP: Hits@10. In [0,1].
    pub accuracy: f64,
    /// Mean per-call latency, strictly positive.
    pub inference_time_ms: f64,
    /// Distinct subjects the model can predict for.
    pub model_cardinality: u64,
    /// IRI of the data KG the model was trained on.
    pub trained_on: String,
    /// (d, h) sampling scope used for KG'.
    pub sampling: (u8, u8),
    pub artifact_ref: String,
    /// xsd:dateTime lexical form, UTC.
    pub created_at: String,
}

impl ModelMetadata {
    pub fn validate(&self) -> Result<(), KgMetaError> {
        let err = |m: &str| Err(KgMetaError::Invalid(m.to_string()));
        if !(0.0..=1.0).contains(&self.accuracy) {
            return err("accuracy outside [0,1]");
        }
        if !(self.inference_time_ms > 0.0) {
            return err("inference time must be positive");
        }
        match self.task_type {
            TaskType::NodeClassifier if self.label_predicate.is_none() => {
                err("node classifier requires a label predicate")
            }
            TaskType::LinkPredictor
                if self.source_node_type.is_none() || self.destination_node_type.is_none() =>
            {
                err("link predictor requires source and destination types")
            }
            _ => Ok(()),
        }
    }
}

/// Reproducible model URI: `<kgnet>model/<task>/<hash>` over the fields
/// that define what was trained.
pub fn model_uri(meta: &ModelMetadata) -> String {
    let mut hasher = Sha256::new();
    for part in [
        meta.task_type.as_str(),
        &meta.target_node_type,
        meta.label_predicate.as_deref().unwrap_or(""),
        meta.source_node_type.as_deref().unwrap_or(""),
        meta.destination_node_type.as_deref().unwrap_or(""),
        &meta.method_name,
        &meta.sampling.0.to_string(),
        &meta.sampling.1.to_string(),
        &meta.trained_on,
    ] {
        hasher.update(part.as_bytes());
        hasher.update([0]);
    }
    let hex = crate::transform::hex_string(&hasher.finalize());
    format!("{KGNET_NS}model/{}/{}", meta.task_type.as_str(), &hex[..16])
}

/// Current UTC time in xsd:dateTime form, from the system clock.
pub fn now_timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let days = secs / 86_400;
    let (h, m, s) = ((secs / 3600) % 24, (secs / 60) % 60, secs % 60);
    // civil-from-days (Howard Hinnant's algorithm)
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = if month <= 2 { y + 1 } else { y };
    format!("{year:04}-{month:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}

/// Side channel for removing model artifacts before metadata is dropped.
pub trait ArtifactDeleter {
    fn delete(&self, artifact_ref: &str) -> Result<(), String>;
}

impl ArtifactDeleter for crate::gml::GmlService {
    fn delete(&self, artifact_ref: &str) -> Result<(), String> {
        self.delete_artifact(artifact_ref).map_err(|e| e.to_string())
    }
}

fn kgnet(local: &str) -> Term {
    Term::iri(format!("{KGNET_NS}{local}"))
}

fn double_lit(v: f64) -> Term {
    Term::typed_literal(format!("{v}"), XSD_DOUBLE)
}

fn int_lit(v: u64) -> Term {
    Term::typed_literal(format!("{v}"), XSD_INTEGER)
}

/// Maintains the KGMeta named graph. Writes are serialized; lookups go
/// straight to the store.
pub struct KgMetaGovernor {
    store: Arc<Store>,
    graph: String,
    write_lock: Mutex<()>,
}

impl KgMetaGovernor {
    pub fn new(store: Arc<Store>) -> KgMetaGovernor {
        KgMetaGovernor {
            store,
            graph: KGMETA_GRAPH.to_string(),
            write_lock: Mutex::new(()),
        }
    }

    pub fn graph(&self) -> &str {
        &self.graph
    }

    fn triples_for(&self, uri: &str, meta: &ModelMetadata) -> Result<Vec<Triple>, KgMetaError> {
        let s = Term::iri(uri);
        let t = |p: Term, o: Term| {
            Triple::new(s.clone(), p, o).map_err(|e| KgMetaError::Invalid(e))
        };
        let mut out = vec![
            t(Term::iri(RDF_TYPE), kgnet(meta.task_type.as_str()))?,
            t(kgnet("TargetNode"), Term::iri(&meta.target_node_type))?,
            t(kgnet("gmlMethod"), Term::literal(&meta.method_name))?,
            t(kgnet("accuracy"), double_lit(meta.accuracy))?,
            t(kgnet("inferenceTimeMs"), double_lit(meta.inference_time_ms))?,
            t(kgnet("modelCardinality"), int_lit(meta.model_cardinality))?,
            t(kgnet("trainedOnKG"), Term::iri(&meta.trained_on))?,
            t(kgnet("samplingDirection"), int_lit(meta.sampling.0 as u64))?,
            t(kgnet("samplingHops"), int_lit(meta.sampling.1 as u64))?,
            t(kgnet("artifactRef"), Term::literal(&meta.artifact_ref))?,
            t(
                kgnet("createdAt"),
                Term::typed_literal(&meta.created_at, XSD_DATETIME),
            )?,
        ];
        if let Some(p) = &meta.label_predicate {
            out.push(t(kgnet("NodeLabel"), Term::iri(p))?);
        }
        if let Some(p) = &meta.source_node_type {
            out.push(t(kgnet("SourceNode"), Term::iri(p))?);
        }
        if let Some(p) = &meta.destination_node_type {
            out.push(t(kgnet("DestinationNode"), Term::iri(p))?);
        }
        Ok(out)
    }

    /// Mints the model URI, writes the metadata triples, and returns the
    /// URI. Re-registering the same trained configuration is an error
    /// carrying the existing URI.
    pub fn register_model(&self, meta: &ModelMetadata) -> Result<String, KgMetaError> {
        meta.validate()?;
        let _guard = self.write_lock.lock().unwrap();
        let uri = model_uri(meta);
        let existing = self
            .store
            .match_bgp(
                &self.graph,
                &[TriplePattern::new(
                    Term::iri(&uri),
                    Term::iri(RDF_TYPE),
                    Term::var("t"),
                )],
            )
            .map_err(|e| KgMetaError::Backend(e.to_string()))?;
        if !existing.is_empty() {
            return Err(KgMetaError::Duplicate { existing: uri });
        }
        let triples = self.triples_for(&uri, meta)?;
        self.store
            .insert(&self.graph, triples)
            .map_err(|e| KgMetaError::Backend(e.to_string()))?;
        Ok(uri)
    }

    /// Constraint value for lookups: TargetNode / NodeLabel / SourceNode /
    /// DestinationNode, matched as IRIs.
    fn constraint_predicate(key: ConstraintKey) -> Option<Term> {
        match key {
            ConstraintKey::TargetNode => Some(kgnet("TargetNode")),
            ConstraintKey::NodeLabel => Some(kgnet("NodeLabel")),
            ConstraintKey::SourceNode => Some(kgnet("SourceNode")),
            ConstraintKey::DestinationNode => Some(kgnet("DestinationNode")),
            ConstraintKey::TopK | ConstraintKey::SimilarTo => None,
        }
    }

    /// All models of the task satisfying every constraint, as a BGP over
    /// the metadata graph. Unknown constraints are ignored (they scope
    /// query execution, not model identity).
    pub fn lookup_models(
        &self,
        task: TaskType,
        constraints: &BTreeMap<ConstraintKey, Term>,
    ) -> Result<Vec<ModelMetadata>, KgMetaError> {
        let mut patterns = vec![TriplePattern::new(
            Term::var("m"),
            Term::iri(RDF_TYPE),
            kgnet(task.as_str()),
        )];
        for (key, value) in constraints {
            if let Some(pred) = Self::constraint_predicate(*key) {
                patterns.push(TriplePattern::new(Term::var("m"), pred, value.clone()));
            }
        }
        let table = self
            .store
            .match_bgp(&self.graph, &patterns)
            .map_err(|e| KgMetaError::Backend(e.to_string()))?;
        let mut out = Vec::new();
        for row in &table.rows {
            if let Some(Term::Iri(uri)) = row.get("m") {
                out.push(self.read_model(uri)?);
            }
        }
        Ok(out)
    }

    /// Decodes one model's triples back into ModelMetadata.
    pub fn read_model(&self, uri: &str) -> Result<ModelMetadata, KgMetaError> {
        let subject = Term::iri(uri);
        let props: BTreeMap<String, Term> = self
            .store
            .triples(&self.graph)
            .into_iter()
            .filter(|t| t.subject == subject)
            .filter_map(|t| t.predicate.as_iri().map(|p| (p.to_string(), t.object)))
            .collect();
        let missing = |field: &str| KgMetaError::MissingField {
            uri: uri.to_string(),
            field: field.to_string(),
        };
        let iri_of = |local: &str| -> Option<String> {
            props
                .get(&format!("{KGNET_NS}{local}"))
                .and_then(|t| t.as_iri())
                .map(str::to_string)
        };
        let lit_of = |local: &str| -> Option<String> {
            props
                .get(&format!("{KGNET_NS}{local}"))
                .and_then(|t| t.as_literal_lexical())
                .map(str::to_string)
        };
        let task_iri = props
            .get(RDF_TYPE)
            .and_then(|t| t.as_iri())
            .ok_or_else(|| missing("rdf:type"))?;
        let task_type = task_iri
            .strip_prefix(KGNET_NS)
            .and_then(TaskType::from_name)
            .ok_or_else(|| missing("task type"))?;
        let parse_num = |local: &str| -> Result<f64, KgMetaError> {
            lit_of(local)
                .ok_or_else(|| missing(local))?
                .parse()
                .map_err(|_| KgMetaError::Invalid(format!("bad number for {local} on <{uri}>")))
        };
        Ok(ModelMetadata {
            model_uri: uri.to_string(),
            task_type,
            target_node_type: iri_of("TargetNode").ok_or_else(|| missing("TargetNode"))?,
            label_predicate: iri_of("NodeLabel"),
            source_node_type: iri_of("SourceNode"),
            destination_node_type: iri_of("DestinationNode"),
            method_name: lit_of("gmlMethod").ok_or_else(|| missing("gmlMethod"))?,
            accuracy: parse_num("accuracy")?,
            inference_time_ms: parse_num("inferenceTimeMs")?,
            model_cardinality: parse_num("modelCardinality")? as u64,
            trained_on: iri_of("trainedOnKG").ok_or_else(|| missing("trainedOnKG"))?,
            sampling: (
                parse_num("samplingDirection")? as u8,
                parse_num("samplingHops")? as u8,
            ),
            artifact_ref: lit_of("artifactRef").ok_or_else(|| missing("artifactRef"))?,
            created_at: lit_of("createdAt").ok_or_else(|| missing("createdAt"))?,
        })
    }

    /// Deletes every matching model: artifacts first, metadata only after
    /// every artifact deletion confirms. Any artifact failure leaves the
    /// metadata graph untouched.
    pub fn delete_models(
        &self,
        task: TaskType,
        constraints: &BTreeMap<ConstraintKey, Term>,
        deleter: &dyn ArtifactDeleter,
    ) -> Result<Vec<String>, KgMetaError> {
        let _guard = self.write_lock.lock().unwrap();
        let matches = self.lookup_models(task, constraints)?;
        for meta in &matches {
            deleter
                .delete(&meta.artifact_ref)
                .map_err(|reason| KgMetaError::ArtifactDelete {
                    artifact: meta.artifact_ref.clone(),
                    reason,
                })?;
        }
        let mut uris = Vec::new();
        for meta in &matches {
            self.store.delete_where(
                &self.graph,
                &[TriplePattern::new(
                    Term::iri(&meta.model_uri),
                    Term::var("p"),
                    Term::var("o"),
                )],
            );
            uris.push(meta.model_uri.clone());
        }
        Ok(uris)
    }

    /// Replaces an existing model's metadata in place (retraining the
    /// same configuration refreshes accuracy, latency, and timestamps).
    pub fn update_model(&self, uri: &str, meta: &ModelMetadata) -> Result<(), KgMetaError> {
        meta.validate()?;
        let _guard = self.write_lock.lock().unwrap();
        let removed = self.store.delete_where(
            &self.graph,
            &[TriplePattern::new(
                Term::iri(uri),
                Term::var("p"),
                Term::var("o"),
            )],
        );
        if removed.is_empty() {
            return Err(KgMetaError::NotFound(uri.to_string()));
        }
        let triples = self.triples_for(uri, meta)?;
        self.store
            .insert(&self.graph, triples)
            .map_err(|e| KgMetaError::Backend(e.to_string()))?;
        Ok(())
    }

    /// The whole metadata graph as canonical N-Triples.
    pub fn export_ntriples(&self) -> String {
        ntriples::serialize(&self.store.triples(&self.graph))
    }

    /// Loads previously exported metadata; returns the triple count added.
    pub fn import_ntriples(&self, text: &str) -> Result<usize, KgMetaError> {
        let triples = ntriples::parse(text).map_err(|e| KgMetaError::Backend(e.to_string()))?;
        self.store
            .insert(&self.graph, triples)
            .map_err(|e| KgMetaError::Backend(e.to_string()))
    }
}
