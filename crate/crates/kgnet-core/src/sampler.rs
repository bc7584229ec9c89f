//! Task-scoped subgraph extraction: builds (d,h)-bounded CONSTRUCT queries
//! around a target node type and collects the resulting triples.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{BackendError, SparqlBackend};
use crate::rdf::{Triple, RDF_TYPE};
use crate::sparqlml::TaskType;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampling parameters d={d} h={h}: both must be 1 or 2")]
    InvalidSpec { d: u8, h: u8 },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Scope of a subgraph extraction: direction (1 = outgoing, 2 =
/// bidirectional) and hop count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub target_node_type: String,
    pub direction: u8,
    pub hops: u8,
}

impl SamplingSpec {
    pub fn new(target_node_type: impl Into<String>, d: u8, h: u8) -> Result<SamplingSpec, SamplerError> {
        if !(1..=2).contains(&d) || !(1..=2).contains(&h) {
            return Err(SamplerError::InvalidSpec { d, h });
        }
        Ok(SamplingSpec {
            target_node_type: target_node_type.into(),
            direction: d,
            hops: h,
        })
    }

    pub fn label(&self) -> String {
        format!("d{}h{}", self.direction, self.hops)
    }
}

/// Per-task default scopes. Node classification works best with d1h1,
/// link prediction with d2h1. The similarity default is an extension.
pub fn default_spec(task_type: TaskType, target_node_type: impl Into<String>) -> SamplingSpec {
    let (d, h) = match task_type {
        TaskType::NodeClassifier => (1, 1),
        TaskType::LinkPredictor => (2, 1),
        TaskType::NodeSimilarity => (1, 1),
    };
    SamplingSpec::new(target_node_type, d, h).unwrap()
}

/// The CONSTRUCT query for a spec. The WHERE clause is the union of hop
/// templates; each template's triples appear in the CONSTRUCT head and are
/// dropped per-solution when unbound.
pub fn build_bgp(spec: &SamplingSpec) -> String {
    let t = &spec.target_node_type;
    let type_pat = format!("?s <{RDF_TYPE}> <{t}> .");

    let mut head: Vec<String> = vec![type_pat.clone()];
    let mut blocks: Vec<String> = Vec::new();

    // outgoing hop 1
    head.push("?s ?p ?o .".into());
    blocks.push(format!("{{ {type_pat} ?s ?p ?o . }}"));
    if spec.direction == 2 {
        head.push("?i ?pi ?s .".into());
        blocks.push(format!("{{ {type_pat} ?i ?pi ?s . }}"));
    }
    if spec.hops == 2 {
        // second hops chain each direction independently
        head.push("?o ?p2 ?o2 .".into());
        blocks.push(format!("{{ {type_pat} ?s ?p ?o . ?o ?p2 ?o2 . }}"));
        if spec.direction == 2 {
            head.push("?i2 ?pi2 ?i .".into());
            blocks.push(format!("{{ {type_pat} ?i ?pi ?s . ?i2 ?pi2 ?i . }}"));
        }
    }

    format!(
        "CONSTRUCT {{ {} }}\nWHERE {{ {} }}",
        head.join(" "),
        blocks.join(" UNION ")
    )
}

/// Extraction result with non-fatal warnings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubgraphExtraction {
    pub triples: BTreeSet<Triple>,
    pub warnings: Vec<String>,
}

pub const DEFAULT_PAGE_SIZE: usize = 100_000;

/// Pulls KG' from a backend, paging the CONSTRUCT through LIMIT/OFFSET.
pub fn extract_subgraph(
    backend: &dyn SparqlBackend,
    spec: &SamplingSpec,
) -> Result<SubgraphExtraction, SamplerError> {
    extract_subgraph_paged(backend, spec, DEFAULT_PAGE_SIZE)
}

pub fn extract_subgraph_paged(
    backend: &dyn SparqlBackend,
    spec: &SamplingSpec,
    page_size: usize,
) -> Result<SubgraphExtraction, SamplerError> {
    let base = build_bgp(spec);
    let mut triples = BTreeSet::new();
    let mut offset = 0usize;
    loop {
        let page_query = format!("{base} LIMIT {page_size} OFFSET {offset}");
        let page = backend.construct(&page_query)?;
        let page_len = page.len();
        triples.extend(page);
        if page_len < page_size {
            break;
        }
        offset += page_size;
    }

    let mut warnings = Vec::new();
    if triples.is_empty() {
        let count_q = format!(
            "SELECT (COUNT(DISTINCT ?s) AS ?n) WHERE {{ ?s <{RDF_TYPE}> <{}> . }}",
            spec.target_node_type
        );
        let targets = backend
            .select(&count_q)
            .ok()
            .and_then(|t| {
                t.rows
                    .first()
                    .and_then(|r| r.get("n"))
                    .and_then(|v| v.as_literal_lexical())
                    .and_then(|s| s.parse::<usize>().ok())
            })
            .unwrap_or(0);
        if targets == 0 {
            warnings.push(format!(
                "no nodes of type <{}> found; extracted subgraph is empty",
                spec.target_node_type
            ));
        }
    }

    Ok(SubgraphExtraction { triples, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_per_task() {
        let nc = default_spec(TaskType::NodeClassifier, "http://t/Pub");
        assert_eq!((nc.direction, nc.hops), (1, 1));
        let lp = default_spec(TaskType::LinkPredictor, "http://t/person");
        assert_eq!((lp.direction, lp.hops), (2, 1));
    }

    #[test]
    fn explicit_override_honored() {
        let s = SamplingSpec::new("http://t/Pub", 2, 2).unwrap();
        assert_eq!(s.label(), "d2h2");
        assert!(SamplingSpec::new("http://t/Pub", 3, 1).is_err());
        assert!(SamplingSpec::new("http://t/Pub", 1, 0).is_err());
    }

    #[test]
    fn d1h1_query_shape() {
        let q = build_bgp(&SamplingSpec::new("http://t/Pub", 1, 1).unwrap());
        assert!(q.starts_with("CONSTRUCT"));
        assert!(q.contains("?s ?p ?o ."));
        assert!(!q.contains("UNION"));
        assert!(!q.contains("?i"));
    }

    #[test]
    fn d2h1_query_has_two_blocks() {
        let q = build_bgp(&SamplingSpec::new("http://t/Pub", 2, 1).unwrap());
        assert_eq!(q.matches("UNION").count(), 1);
        assert!(q.contains("?i ?pi ?s ."));
    }

    #[test]
    fn d1h2_query_chains_outgoing() {
        let q = build_bgp(&SamplingSpec::new("http://t/Pub", 1, 2).unwrap());
        assert_eq!(q.matches("UNION").count(), 1);
        assert!(q.contains("?o ?p2 ?o2 ."));
        assert!(!q.contains("?i"));
    }
}
