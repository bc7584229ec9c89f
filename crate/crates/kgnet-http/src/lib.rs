//! HTTP layer: a SPARQL 1.1 protocol client for remote endpoints, a
//! loopback endpoint serving the embedded store, and the platform's JSON
//! APIs (GMLaaS training/inference and SPARQL-ML queries).

pub mod client;
pub mod results;
pub mod server;

pub use client::RemoteEndpoint;
pub use server::{router, ServerHandle};
