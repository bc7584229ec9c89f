//! kgnet-core: a GML-enabled knowledge-graph platform. RDF storage,
//! the SPARQL-ML dialect, task-scoped subgraph sampling, dataset
//! transformation, baseline model training, and query planning.

pub mod engine;
pub mod rdf;
pub mod sampler;
pub mod transform;
pub mod gml;
pub mod kgmeta;
pub mod pipeline;
pub mod planner;
pub mod sparqlml;
