//! AST for the SPARQL-ML dialect.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::rdf::{Term, TriplePattern};

/// GML task kinds a user-defined predicate can be typed as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskType {
    NodeClassifier,
    LinkPredictor,
    /// Entity-similarity task. Reserved syntax extension; no query form for
    /// it appears in the upstream language.
    NodeSimilarity,
}

impl TaskType {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskType::NodeClassifier => "NodeClassifier",
            TaskType::LinkPredictor => "LinkPredictor",
            TaskType::NodeSimilarity => "NodeSimilarity",
        }
    }

    pub fn from_name(name: &str) -> Option<TaskType> {
        match name {
            "NodeClassifier" => Some(TaskType::NodeClassifier),
            "LinkPredictor" => Some(TaskType::LinkPredictor),
            "NodeSimilarity" => Some(TaskType::NodeSimilarity),
            _ => None,
        }
    }
}

/// Constraint keys attachable to a user-defined predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKey {
    TargetNode,
    NodeLabel,
    SourceNode,
    DestinationNode,
    TopK,
    /// Reserved for the entity-similarity extension.
    SimilarTo,
}

impl ConstraintKey {
    /// The kgnet local name used in query text.
    pub fn local_name(&self) -> &'static str {
        match self {
            ConstraintKey::TargetNode => "TargetNode",
            ConstraintKey::NodeLabel => "NodeLabel",
            ConstraintKey::SourceNode => "SourceNode",
            ConstraintKey::DestinationNode => "DestinationNode",
            ConstraintKey::TopK => "TopK-Links",
            ConstraintKey::SimilarTo => "SimilarTo",
        }
    }

    pub fn from_local_name(name: &str) -> Option<ConstraintKey> {
        match name {
            "TargetNode" => Some(ConstraintKey::TargetNode),
            // both spellings appear in the wild
            "NodeLabel" | "NodeLable" => Some(ConstraintKey::NodeLabel),
            "SourceNode" => Some(ConstraintKey::SourceNode),
            "DestinationNode" => Some(ConstraintKey::DestinationNode),
            "TopK-Links" | "TopK" => Some(ConstraintKey::TopK),
            "SimilarTo" => Some(ConstraintKey::SimilarTo),
            _ => None,
        }
    }
}

/// One user-defined predicate group: the typed predicate variable, its
/// constraints, and (for SELECT queries) the triple pattern that uses it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UdpGroup {
    pub predicate_var: String,
    pub task_type: TaskType,
    /// Bound in SELECT queries; absent in DELETE queries, which carry only
    /// the constraint patterns.
    pub subject_var: Option<String>,
    pub object_var: Option<String>,
    pub constraints: IndexMap<ConstraintKey, Term>,
}

impl UdpGroup {
    pub fn top_k(&self) -> Option<u64> {
        self.constraints
            .get(&ConstraintKey::TopK)
            .and_then(Term::as_literal_lexical)
            .and_then(|s| s.parse().ok())
    }
}

/// Budget priorities for training-method selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Priority {
    ModelScore,
    TrainingTime,
    Memory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_memory_bytes: u64,
    pub max_time_seconds: u64,
    pub priority: Priority,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            max_memory_bytes: 50 * (1 << 30),
            max_time_seconds: 3600,
            priority: Priority::ModelScore,
        }
    }
}

/// Parsed TrainGML request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainGmlSpec {
    pub name: String,
    pub task_type: TaskType,
    pub target_node_type: String,
    /// NC: the label predicate IRI.
    pub label_predicate: Option<String>,
    /// LP: (source type, destination type) IRIs.
    pub source_node_type: Option<String>,
    pub destination_node_type: Option<String>,
    pub budget: Budget,
    pub hyperparams: IndexMap<String, String>,
    pub method_override: Option<String>,
    /// Optional (d, h) sampling override.
    pub sampling_override: Option<(u8, u8)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryKind {
    Select,
    InsertTrain,
    DeleteModel,
}

/// A parsed SPARQL-ML query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparqlMlAst {
    pub kind: QueryKind,
    pub prefixes: IndexMap<String, String>,
    pub projection: Vec<String>,
    pub data_patterns: Vec<TriplePattern>,
    pub gml_patterns: Vec<UdpGroup>,
    pub train_payload: Option<TrainGmlSpec>,
}

impl SparqlMlAst {
    /// True when the query is plain SPARQL with no GML predicates.
    pub fn is_plain(&self) -> bool {
        self.gml_patterns.is_empty() && self.train_payload.is_none()
    }
}
