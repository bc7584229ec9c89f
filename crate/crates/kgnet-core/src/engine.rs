//! Plain-SPARQL evaluation over the embedded store, and the backend
//! abstraction shared with remote endpoints.
//!
//! Only the subset the platform itself emits is supported: SELECT and
//! CONSTRUCT over basic graph patterns (with top-level UNION), COUNT
//! DISTINCT, LIMIT/OFFSET, INSERT DATA, and DELETE WHERE. Everything else
//! belongs to a real endpoint.

use std::collections::BTreeSet;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::rdf::store::{instantiate, match_patterns, pattern_variables};
use crate::rdf::{BindingTable, Store, Term, Triple, TriplePattern};
use crate::sparqlml::lex::TokenKind;
use crate::sparqlml::parse::{ParseError, Parser};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("query error: {0}")]
    Query(#[from] ParseError),
    #[error("unsupported query form: {0}")]
    Unsupported(String),
    #[error("http error for {endpoint}: {message} (query: {query})")]
    Http {
        endpoint: String,
        query: String,
        message: String,
    },
    #[error("malformed response from {endpoint}: {message}")]
    MalformedResponse { endpoint: String, message: String },
    #[error("timeout contacting {endpoint} (query: {query})")]
    Timeout { endpoint: String, query: String },
    #[error("store error: {0}")]
    Store(String),
}

/// Anything that answers SPARQL: the embedded store or a remote endpoint.
pub trait SparqlBackend: Send + Sync {
    fn select(&self, query: &str) -> Result<BindingTable, BackendError>;
    fn construct(&self, query: &str) -> Result<Vec<Triple>, BackendError>;
    fn update(&self, query: &str) -> Result<(), BackendError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Star,
    Vars(Vec<String>),
    CountDistinct { var: String, alias: String },
}

/// A parsed plain-SPARQL query in the supported subset.
#[derive(Debug, Clone, PartialEq)]
pub enum StoreQuery {
    Select {
        projection: Projection,
        blocks: Vec<Vec<TriplePattern>>,
        limit: Option<usize>,
        offset: usize,
    },
    Construct {
        template: Vec<TriplePattern>,
        blocks: Vec<Vec<TriplePattern>>,
        limit: Option<usize>,
        offset: usize,
    },
    InsertData {
        triples: Vec<Triple>,
    },
    DeleteWhere {
        patterns: Vec<TriplePattern>,
    },
}

fn parse_where_blocks(
    p: &mut Parser<'_>,
    prefixes: &IndexMap<String, String>,
) -> Result<Vec<Vec<TriplePattern>>, ParseError> {
    p.expect_punct('{')?;
    // `{ { b1 } UNION { b2 } ... }` or a flat pattern list
    if matches!(p.peek()?, Some(t) if t.kind == TokenKind::Punct('{')) {
        let mut blocks = Vec::new();
        loop {
            p.expect_punct('{')?;
            blocks.push(p.parse_pattern_block(prefixes)?);
            if p.peek_keyword("union")? {
                p.next()?;
                continue;
            }
            p.expect_punct('}')?;
            return Ok(blocks);
        }
    }
    Ok(vec![p.parse_pattern_block(prefixes)?])
}

fn parse_limit_offset(p: &mut Parser<'_>) -> Result<(Option<usize>, usize), ParseError> {
    let mut limit = None;
    let mut offset = 0;
    loop {
        if p.peek_keyword("limit")? {
            p.next()?;
            limit = Some(expect_number(p)?);
        } else if p.peek_keyword("offset")? {
            p.next()?;
            offset = expect_number(p)?;
        } else {
            return Ok((limit, offset));
        }
    }
}

fn expect_number(p: &mut Parser<'_>) -> Result<usize, ParseError> {
    match p.next()? {
        Some(t) => match t.kind {
            TokenKind::Number(n) => n
                .parse()
                .map_err(|_| ParseError::Semantic(format!("bad number {n:?}"))),
            other => Err(ParseError::Semantic(format!(
                "expected a number, found {other:?}"
            ))),
        },
        None => Err(ParseError::Semantic("expected a number".into())),
    }
}

/// Parses a query in the supported plain-SPARQL subset.
pub fn parse_store_query(text: &str) -> Result<StoreQuery, BackendError> {
    let mut p = Parser::new(text);
    let prefixes = p.parse_prefixes()?;

    if p.peek_keyword("select")? {
        p.next()?;
        if p.peek_keyword("distinct")? {
            p.next()?; // results are set-semantic either way
        }
        let projection = match p.peek()? {
            Some(t) if t.kind == TokenKind::Punct('*') => {
                p.next()?;
                Projection::Star
            }
            Some(t) if t.kind == TokenKind::Punct('(') => {
                p.next()?;
                p.expect_keyword("count")?;
                p.expect_punct('(')?;
                p.expect_keyword("distinct")?;
                let var = expect_variable(&mut p)?;
                p.expect_punct(')')?;
                p.expect_keyword("as")?;
                let alias = expect_variable(&mut p)?;
                p.expect_punct(')')?;
                Projection::CountDistinct { var, alias }
            }
            _ => {
                let mut vars = Vec::new();
                while let Some(t) = p.peek()? {
                    match &t.kind {
                        TokenKind::Variable(v) => {
                            vars.push(v.clone());
                            p.next()?;
                        }
                        _ => break,
                    }
                }
                if vars.is_empty() {
                    return Err(BackendError::Unsupported("empty SELECT projection".into()));
                }
                Projection::Vars(vars)
            }
        };
        p.expect_keyword("where")?;
        let blocks = parse_where_blocks(&mut p, &prefixes)?;
        let (limit, offset) = parse_limit_offset(&mut p)?;
        Ok(StoreQuery::Select {
            projection,
            blocks,
            limit,
            offset,
        })
    } else if p.peek_keyword("construct")? {
        p.next()?;
        p.expect_punct('{')?;
        let template = p.parse_pattern_block(&prefixes)?;
        p.expect_keyword("where")?;
        let blocks = parse_where_blocks(&mut p, &prefixes)?;
        let (limit, offset) = parse_limit_offset(&mut p)?;
        Ok(StoreQuery::Construct {
            template,
            blocks,
            limit,
            offset,
        })
    } else if p.peek_keyword("insert")? {
        p.next()?;
        p.expect_keyword("data")?;
        p.expect_punct('{')?;
        let patterns = p.parse_pattern_block(&prefixes)?;
        let mut triples = Vec::new();
        for pat in patterns {
            triples.push(
                pat.to_triple()
                    .map_err(|e| BackendError::Unsupported(format!("INSERT DATA: {e}")))?,
            );
        }
        Ok(StoreQuery::InsertData { triples })
    } else if p.peek_keyword("delete")? {
        p.next()?;
        p.expect_keyword("where")?;
        p.expect_punct('{')?;
        let patterns = p.parse_pattern_block(&prefixes)?;
        Ok(StoreQuery::DeleteWhere { patterns })
    } else {
        Err(BackendError::Unsupported(
            "expected SELECT, CONSTRUCT, INSERT DATA, or DELETE WHERE".into(),
        ))
    }
}

fn expect_variable(p: &mut Parser<'_>) -> Result<String, ParseError> {
    match p.next()? {
        Some(t) => match t.kind {
            TokenKind::Variable(v) => Ok(v),
            other => Err(ParseError::Semantic(format!(
                "expected a variable, found {other:?}"
            ))),
        },
        None => Err(ParseError::Semantic("expected a variable".into())),
    }
}

/// The embedded store exposed through the backend trait, scoped to one
/// named graph.
#[derive(Clone)]
pub struct EmbeddedBackend {
    store: Arc<Store>,
    graph: String,
}

impl EmbeddedBackend {
    pub fn new(store: Arc<Store>, graph: impl Into<String>) -> EmbeddedBackend {
        EmbeddedBackend {
            store,
            graph: graph.into(),
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn graph(&self) -> &str {
        &self.graph
    }

    pub fn run(&self, query: &StoreQuery) -> Result<QueryOutcome, BackendError> {
        match query {
            StoreQuery::Select {
                projection,
                blocks,
                limit,
                offset,
            } => {
                let triples: indexmap::IndexSet<Triple> =
                    self.store.triples(&self.graph).into_iter().collect();
                let mut rows = Vec::new();
                for block in blocks {
                    rows.extend(match_patterns(&triples, block));
                }
                let all_vars: Vec<String> =
                    pattern_variables(&blocks.concat());
                let table = BindingTable {
                    variables: all_vars,
                    rows,
                };
                let table = match projection {
                    Projection::Star => {
                        let vars = table.variables.clone();
                        table.project(&vars)
                    }
                    Projection::Vars(vars) => table.project(vars),
                    Projection::CountDistinct { var, alias } => {
                        let distinct: BTreeSet<Option<Term>> = table
                            .rows
                            .iter()
                            .map(|r| r.get(var).cloned())
                            .collect();
                        let n = distinct.iter().filter(|t| t.is_some()).count();
                        let mut t = BindingTable::new(vec![alias.clone()]);
                        t.rows.push(
                            [(
                                alias.clone(),
                                Term::typed_literal(
                                    n.to_string(),
                                    crate::rdf::term::XSD_INTEGER,
                                ),
                            )]
                            .into_iter()
                            .collect(),
                        );
                        t
                    }
                };
                let mut table = table;
                table.sort_rows();
                paginate_rows(&mut table, *limit, *offset);
                Ok(QueryOutcome::Table(table))
            }
            StoreQuery::Construct {
                template,
                blocks,
                limit,
                offset,
            } => {
                let triples: indexmap::IndexSet<Triple> =
                    self.store.triples(&self.graph).into_iter().collect();
                let mut out: BTreeSet<Triple> = BTreeSet::new();
                for block in blocks {
                    for row in match_patterns(&triples, block) {
                        for t in template {
                            // template triples with unbound variables are
                            // silently dropped, per CONSTRUCT semantics
                            if let Ok(triple) = instantiate(t, &row) {
                                out.insert(triple);
                            }
                        }
                    }
                }
                let mut triples: Vec<Triple> = out.into_iter().collect();
                let end = limit
                    .map(|l| (*offset + l).min(triples.len()))
                    .unwrap_or(triples.len());
                let start = (*offset).min(triples.len());
                triples = triples[start..end.max(start)].to_vec();
                Ok(QueryOutcome::Triples(triples))
            }
            StoreQuery::InsertData { triples } => {
                let n = self
                    .store
                    .insert(&self.graph, triples.clone())
                    .map_err(|e| BackendError::Store(e.to_string()))?;
                Ok(QueryOutcome::Count(n))
            }
            StoreQuery::DeleteWhere { patterns } => {
                let removed = self.store.delete_where(&self.graph, patterns);
                Ok(QueryOutcome::Count(removed.len()))
            }
        }
    }
}

fn paginate_rows(table: &mut BindingTable, limit: Option<usize>, offset: usize) {
    let len = table.rows.len();
    let start = offset.min(len);
    let end = limit.map(|l| (start + l).min(len)).unwrap_or(len);
    table.rows = table.rows[start..end].to_vec();
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutcome {
    Table(BindingTable),
    Triples(Vec<Triple>),
    Count(usize),
}

impl SparqlBackend for EmbeddedBackend {
    fn select(&self, query: &str) -> Result<BindingTable, BackendError> {
        let parsed = parse_store_query(query)?;
        match self.run(&parsed)? {
            QueryOutcome::Table(t) => Ok(t),
            _ => Err(BackendError::Unsupported("not a SELECT query".into())),
        }
    }

    fn construct(&self, query: &str) -> Result<Vec<Triple>, BackendError> {
        let parsed = parse_store_query(query)?;
        match self.run(&parsed)? {
            QueryOutcome::Triples(t) => Ok(t),
            _ => Err(BackendError::Unsupported("not a CONSTRUCT query".into())),
        }
    }

    fn update(&self, query: &str) -> Result<(), BackendError> {
        let parsed = parse_store_query(query)?;
        match self.run(&parsed)? {
            QueryOutcome::Count(_) => Ok(()),
            _ => Err(BackendError::Unsupported("not an update query".into())),
        }
    }
}
