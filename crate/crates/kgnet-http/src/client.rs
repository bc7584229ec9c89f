//! SPARQL 1.1 protocol client: POST with a urlencoded `query=` body,
//! JSON results for SELECT, N-Triples for CONSTRUCT.

use std::time::Duration;

use kgnet_core::engine::{BackendError, SparqlBackend};
use kgnet_core::rdf::{ntriples, BindingTable, Triple};

use crate::results::table_from_json;

pub struct RemoteEndpoint {
    endpoint: String,
    http: reqwest::blocking::Client,
}

impl RemoteEndpoint {
    pub fn new(endpoint: impl Into<String>) -> RemoteEndpoint {
        RemoteEndpoint::with_timeout(endpoint, Duration::from_secs(120))
    }

    pub fn with_timeout(endpoint: impl Into<String>, timeout: Duration) -> RemoteEndpoint {
        RemoteEndpoint {
            endpoint: endpoint.into(),
            http: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("default TLS-free client"),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn post(
        &self,
        field: &str,
        query: &str,
        accept: &str,
    ) -> Result<reqwest::blocking::Response, BackendError> {
        let response = self
            .http
            .post(&self.endpoint)
            .header("Accept", accept)
            .form(&[(field, query)])
            .send()
            .map_err(|e| self.request_error(query, e))?;
        if !response.status().is_success() {
            return Err(BackendError::Http {
                endpoint: self.endpoint.clone(),
                query: query.to_string(),
                message: format!("status {}", response.status()),
            });
        }
        Ok(response)
    }

    fn request_error(&self, query: &str, e: reqwest::Error) -> BackendError {
        if e.is_timeout() {
            BackendError::Timeout {
                endpoint: self.endpoint.clone(),
                query: query.to_string(),
            }
        } else {
            BackendError::Http {
                endpoint: self.endpoint.clone(),
                query: query.to_string(),
                message: e.to_string(),
            }
        }
    }

    fn malformed(&self, message: impl Into<String>) -> BackendError {
        BackendError::MalformedResponse {
            endpoint: self.endpoint.clone(),
            message: message.into(),
        }
    }
}

impl SparqlBackend for RemoteEndpoint {
    fn select(&self, query: &str) -> Result<BindingTable, BackendError> {
        let response = self.post("query", query, "application/sparql-results+json")?;
        let doc: serde_json::Value = response
            .json()
            .map_err(|e| self.malformed(format!("invalid JSON: {e}")))?;
        table_from_json(&doc).map_err(|e| self.malformed(e))
    }

    fn construct(&self, query: &str) -> Result<Vec<Triple>, BackendError> {
        let response = self.post("query", query, "application/n-triples")?;
        let text = response
            .text()
            .map_err(|e| self.malformed(format!("unreadable body: {e}")))?;
        ntriples::parse(&text).map_err(|e| self.malformed(e.to_string()))
    }

    fn update(&self, query: &str) -> Result<(), BackendError> {
        self.post("update", query, "*/*").map(|_| ())
    }
}
