//! In-memory quad store with basic-graph-pattern matching.

use std::collections::BTreeMap;
use std::sync::RwLock;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::term::{Term, Triple, TriplePattern};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid graph IRI {0:?}")]
    InvalidGraph(String),
    #[error("malformed triple at index {index}: {reason}")]
    MalformedTriple { index: usize, reason: String },
    #[error("empty basic graph pattern")]
    EmptyPattern,
}

/// A solution sequence: an ordered variable list plus one map per row.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BindingTable {
    pub variables: Vec<String>,
    pub rows: Vec<BTreeMap<String, Term>>,
}

impl BindingTable {
    pub fn new(variables: Vec<String>) -> BindingTable {
        BindingTable {
            variables,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Keeps only the named columns, dropping rows' extra bindings and
    /// deduplicating the projected rows.
    pub fn project(&self, variables: &[String]) -> BindingTable {
        let mut rows: Vec<BTreeMap<String, Term>> = Vec::new();
        for row in &self.rows {
            let projected: BTreeMap<String, Term> = variables
                .iter()
                .filter_map(|v| row.get(v).map(|t| (v.clone(), t.clone())))
                .collect();
            if !rows.contains(&projected) {
                rows.push(projected);
            }
        }
        BindingTable {
            variables: variables.to_vec(),
            rows,
        }
    }

    /// Sorts rows by the first listed variable's term, then by the full row.
    /// This is the store's documented deterministic result order.
    pub fn sort_rows(&mut self) {
        let first = self.variables.first().cloned();
        self.rows.sort_by(|a, b| {
            let key = |row: &BTreeMap<String, Term>| first.as_ref().and_then(|v| row.get(v).cloned());
            key(a).cmp(&key(b)).then_with(|| a.cmp(b))
        });
    }
}

/// Matches one pattern position against a ground term under a binding set.
fn unify(
    pattern: &Term,
    value: &Term,
    bindings: &mut BTreeMap<String, Term>,
) -> bool {
    match pattern {
        Term::Variable(name) => match bindings.get(name) {
            Some(bound) => bound == value,
            None => {
                bindings.insert(name.clone(), value.clone());
                true
            }
        },
        other => other == value,
    }
}

/// Extends each partial solution with every triple matching `pattern`.
fn extend_with_pattern(
    triples: &IndexSet<Triple>,
    pattern: &TriplePattern,
    partial: Vec<BTreeMap<String, Term>>,
) -> Vec<BTreeMap<String, Term>> {
    let mut out = Vec::new();
    for bindings in partial {
        for triple in triples {
            let mut candidate = bindings.clone();
            if unify(&pattern.subject, &triple.subject, &mut candidate)
                && unify(&pattern.predicate, &triple.predicate, &mut candidate)
                && unify(&pattern.object, &triple.object, &mut candidate)
            {
                out.push(candidate);
            }
        }
    }
    out
}

/// Evaluates a conjunction of patterns over a triple set by nested-loop join.
pub fn match_patterns(triples: &IndexSet<Triple>, patterns: &[TriplePattern]) -> Vec<BTreeMap<String, Term>> {
    let mut solutions = vec![BTreeMap::new()];
    for pattern in patterns {
        solutions = extend_with_pattern(triples, pattern, solutions);
        if solutions.is_empty() {
            break;
        }
    }
    solutions
}

/// In-memory named-graph store. Readers run concurrently; writes take the
/// exclusive lock.
#[derive(Debug, Default)]
pub struct Store {
    graphs: RwLock<BTreeMap<String, IndexSet<Triple>>>,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    /// Inserts triples into a named graph, returning how many were new.
    pub fn insert(&self, graph: &str, triples: Vec<Triple>) -> Result<usize, StoreError> {
        Term::Iri(graph.to_string())
            .validate()
            .map_err(|_| StoreError::InvalidGraph(graph.to_string()))?;
        for (index, t) in triples.iter().enumerate() {
            // Re-validate: Triple construction enforces this, but callers can
            // build values through deserialization.
            Triple::new(t.subject.clone(), t.predicate.clone(), t.object.clone())
                .map_err(|reason| StoreError::MalformedTriple { index, reason })?;
        }
        let mut graphs = self.graphs.write().unwrap();
        let set = graphs.entry(graph.to_string()).or_default();
        let before = set.len();
        for t in triples {
            set.insert(t);
        }
        Ok(set.len() - before)
    }

    /// Removes every triple matching the conjunction's instantiations.
    /// Returns the removed triples.
    pub fn delete_where(&self, graph: &str, patterns: &[TriplePattern]) -> Vec<Triple> {
        let mut graphs = self.graphs.write().unwrap();
        let Some(set) = graphs.get_mut(graph) else {
            return Vec::new();
        };
        let solutions = match_patterns(set, patterns);
        let mut doomed: IndexSet<Triple> = IndexSet::new();
        for row in &solutions {
            for pattern in patterns {
                if let Ok(t) = instantiate(pattern, row) {
                    doomed.insert(t);
                }
            }
        }
        set.retain(|t| !doomed.contains(t));
        let mut removed: Vec<Triple> = doomed.into_iter().collect();
        removed.sort();
        removed
    }

    /// Evaluates a basic graph pattern. An unknown graph yields an empty
    /// table. Rows are sorted by the first projected variable's term.
    pub fn match_bgp(&self, graph: &str, patterns: &[TriplePattern]) -> Result<BindingTable, StoreError> {
        if patterns.is_empty() {
            return Err(StoreError::EmptyPattern);
        }
        let variables = pattern_variables(patterns);
        let graphs = self.graphs.read().unwrap();
        let mut table = BindingTable::new(variables);
        if let Some(set) = graphs.get(graph) {
            let solutions = match_patterns(set, patterns);
            for row in solutions {
                if !table.rows.contains(&row) {
                    table.rows.push(row);
                }
            }
        }
        table.sort_rows();
        Ok(table)
    }

    pub fn triples(&self, graph: &str) -> Vec<Triple> {
        let graphs = self.graphs.read().unwrap();
        graphs
            .get(graph)
            .map(|s| {
                let mut v: Vec<Triple> = s.iter().cloned().collect();
                v.sort();
                v
            })
            .unwrap_or_default()
    }

    pub fn len(&self, graph: &str) -> usize {
        let graphs = self.graphs.read().unwrap();
        graphs.get(graph).map(IndexSet::len).unwrap_or(0)
    }

    pub fn is_empty(&self, graph: &str) -> bool {
        self.len(graph) == 0
    }

    pub fn graph_names(&self) -> Vec<String> {
        self.graphs.read().unwrap().keys().cloned().collect()
    }

    pub fn clear(&self, graph: &str) {
        self.graphs.write().unwrap().remove(graph);
    }
}

/// Variables of a pattern list in order of first appearance.
pub fn pattern_variables(patterns: &[TriplePattern]) -> Vec<String> {
    let mut vars = Vec::new();
    for p in patterns {
        for v in p.variables() {
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_string());
            }
        }
    }
    vars
}

/// Substitutes a solution row into a pattern. Errors if any variable is
/// unbound or the result is not a valid triple.
pub fn instantiate(pattern: &TriplePattern, row: &BTreeMap<String, Term>) -> Result<Triple, String> {
    let subst = |t: &Term| -> Result<Term, String> {
        match t {
            Term::Variable(name) => row
                .get(name)
                .cloned()
                .ok_or_else(|| format!("unbound variable ?{name}")),
            other => Ok(other.clone()),
        }
    };
    Triple::new(
        subst(&pattern.subject)?,
        subst(&pattern.predicate)?,
        subst(&pattern.object)?,
    )
}
