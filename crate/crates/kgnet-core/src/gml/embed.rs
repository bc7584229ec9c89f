//! Exact brute-force embedding similarity store.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GmlError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbeddingStore {
    pub dimension: usize,
    pub entries: BTreeMap<String, Vec<f64>>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl EmbeddingStore {
    pub fn new(dimension: usize) -> EmbeddingStore {
        EmbeddingStore {
            dimension,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<(), GmlError> {
        if vector.len() != self.dimension {
            return Err(GmlError::DimensionMismatch {
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(GmlError::InvalidArgument("non-finite vector component".into()));
        }
        self.entries.insert(key.into(), vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact top-k by cosine similarity, descending; ties toward the
    /// smaller key. `exclude` drops one entry (the query node itself).
    pub fn knn_vector(
        &self,
        query: &[f64],
        k: usize,
        exclude: Option<&str>,
    ) -> Result<Vec<(String, f64)>, GmlError> {
        if query.len() != self.dimension {
            return Err(GmlError::DimensionMismatch {
                expected: self.dimension,
                found: query.len(),
            });
        }
        if query.iter().all(|x| *x == 0.0) {
            return Err(GmlError::ZeroVector);
        }
        let mut scored: Vec<(String, f64)> = self
            .entries
            .iter()
            .filter(|(key, _)| Some(key.as_str()) != exclude)
            .map(|(key, v)| (key.clone(), cosine(query, v)))
            .collect();
        scored.sort_by(|(ka, sa), (kb, sb)| sb.partial_cmp(sa).unwrap().then(ka.cmp(kb)));
        scored.truncate(k);
        Ok(scored)
    }

    pub fn knn_node(&self, key: &str, k: usize) -> Result<Vec<(String, f64)>, GmlError> {
        let query = self
            .entries
            .get(key)
            .ok_or_else(|| GmlError::UnknownNode(key.to_string()))?
            .clone();
        self.knn_vector(&query, k, Some(key))
    }
}
