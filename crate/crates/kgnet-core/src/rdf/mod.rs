//! RDF data model, in-memory store, and N-Triples I/O.

pub mod ntriples;
pub mod store;
pub mod term;

pub use store::{BindingTable, Store, StoreError};
pub use term::{Term, Triple, TriplePattern, KGNET_NS, RDF_TYPE};
