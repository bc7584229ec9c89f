//! SPARQL-ML SELECT planning and execution: per-predicate model choice
//! (exact integer program by enumeration), per-binding vs dictionary
//! plan shapes under a call-cost model, rewrite to plain SPARQL, and
//! client-side inference joins.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use thiserror::Error;

use crate::engine::{BackendError, SparqlBackend};
use crate::gml::{GmlService, LinkResponse, NodeClassResponse};
use crate::kgmeta::{KgMetaError, KgMetaGovernor, ModelMetadata};
use crate::rdf::{BindingTable, Term, TriplePattern};
use crate::sparqlml::render::compact_iri;
use crate::sparqlml::{SparqlMlAst, TaskType, UdpGroup};
use crate::transform::parse_key;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no model matches predicate ?{0}")]
    NoModelMatches(String),
    #[error("model selection infeasible: {0}")]
    Infeasible(String),
    #[error("metadata: {0}")]
    KgMeta(#[from] KgMetaError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("inference call failed: {0}")]
    Inference(String),
    #[error("inference left targets unresolved (partial result withheld): {0:?}")]
    Unresolved(Vec<String>),
    #[error("{0}")]
    Invalid(String),
}

/// One registered model as the optimizer sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub model_uri: String,
    pub artifact_ref: String,
    pub accuracy: f64,
    pub time_ms: f64,
    pub cardinality: u64,
}

impl From<&ModelMetadata> for Candidate {
    fn from(m: &ModelMetadata) -> Candidate {
        Candidate {
            model_uri: m.model_uri.clone(),
            artifact_ref: m.artifact_ref.clone(),
            accuracy: m.accuracy,
            time_ms: m.inference_time_ms,
            cardinality: m.model_cardinality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Maximize total accuracy subject to total inference time ≤ limit.
    MaxAccuracy { max_total_time_ms: f64 },
    /// Minimize total inference time subject to each chosen model's
    /// accuracy ≥ floor.
    MinTime { min_accuracy: f64 },
}

impl Default for Objective {
    fn default() -> Objective {
        Objective::MaxAccuracy {
            max_total_time_ms: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelChoiceProblem {
    /// Candidates per user-defined predicate, in query order.
    pub groups: Vec<Vec<Candidate>>,
    pub objective: Objective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Chosen candidate index per group.
    pub chosen: Vec<usize>,
    /// MaxAccuracy: total accuracy; MinTime: total time in ms.
    pub objective_value: f64,
}

/// Exact optimum by exhaustive enumeration over the cross product
/// (candidate lists are KGMeta-scale). Ties break toward higher total
/// accuracy, then lower total time, then smaller model-URI vector.
pub fn select_models(problem: &ModelChoiceProblem) -> Result<Assignment, PlanError> {
    if problem.groups.iter().any(|g| g.is_empty()) {
        return Err(PlanError::Invalid("every group needs a candidate".into()));
    }
    // per-group accuracy floors fail closed with a per-group diagnosis
    if let Objective::MinTime { min_accuracy } = problem.objective {
        let violating: Vec<String> = problem
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iter().all(|c| c.accuracy < min_accuracy))
            .map(|(i, g)| {
                let best = g.iter().map(|c| c.accuracy).fold(0.0, f64::max);
                format!("group {i}: best accuracy {best} < required {min_accuracy}")
            })
            .collect();
        if !violating.is_empty() {
            return Err(PlanError::Infeasible(violating.join("; ")));
        }
    }

    let mut indices = vec![0usize; problem.groups.len()];
    let mut best: Option<(Vec<usize>, f64, f64, Vec<&str>)> = None;
    loop {
        let picks: Vec<&Candidate> = indices
            .iter()
            .zip(&problem.groups)
            .map(|(i, g)| &g[*i])
            .collect();
        let total_acc: f64 = picks.iter().map(|c| c.accuracy).sum();
        let total_time: f64 = picks.iter().map(|c| c.time_ms).sum();
        let uris: Vec<&str> = picks.iter().map(|c| c.model_uri.as_str()).collect();
        let feasible = match problem.objective {
            Objective::MaxAccuracy { max_total_time_ms } => total_time <= max_total_time_ms,
            Objective::MinTime { min_accuracy } => {
                picks.iter().all(|c| c.accuracy >= min_accuracy)
            }
        };
        if feasible {
            let better = match &best {
                None => true,
                Some((_, b_acc, b_time, b_uris)) => {
                    let primary = match problem.objective {
                        Objective::MaxAccuracy { .. } => {
                            total_acc.partial_cmp(b_acc).unwrap()
                        }
                        Objective::MinTime { .. } => b_time.partial_cmp(&total_time).unwrap(),
                    };
                    primary
                        .then(total_acc.partial_cmp(b_acc).unwrap())
                        .then(b_time.partial_cmp(&total_time).unwrap())
                        .then(b_uris.cmp(&uris))
                        .is_gt()
                }
            };
            if better {
                best = Some((indices.clone(), total_acc, total_time, uris));
            }
        }
        // advance the cross-product odometer
        let mut pos = indices.len();
        loop {
            if pos == 0 {
                let (chosen, acc, time) = match best {
                    Some((chosen, acc, time, _)) => (chosen, acc, time),
                    None => {
                        let limit = match problem.objective {
                            Objective::MaxAccuracy { max_total_time_ms } => format!(
                                "no assignment has total time ≤ {max_total_time_ms} ms"
                            ),
                            Objective::MinTime { .. } => "no feasible assignment".to_string(),
                        };
                        return Err(PlanError::Infeasible(limit));
                    }
                };
                let objective_value = match problem.objective {
                    Objective::MaxAccuracy { .. } => acc,
                    Objective::MinTime { .. } => time,
                };
                return Ok(Assignment {
                    chosen,
                    objective_value,
                });
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < problem.groups[pos].len() {
                break;
            }
            indices[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModelParams {
    /// Milliseconds per inference HTTP call.
    pub c_call_ms: f64,
    /// Milliseconds per dictionary entry transferred.
    pub c_item_ms: f64,
}

impl Default for CostModelParams {
    fn default() -> CostModelParams {
        CostModelParams {
            c_call_ms: 50.0,
            c_item_ms: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanShape {
    /// One inference call per binding row.
    PerBinding,
    /// One call fetching predictions for all bindings, joined by lookup.
    Dictionary,
}

/// cost(PerBinding) = B·c_call; cost(Dictionary) = c_call + C·c_item.
/// Cheaper wins; ties go to Dictionary (fewer calls).
pub fn choose_plan(bindings: u64, cardinality: u64, params: &CostModelParams) -> (PlanShape, f64) {
    let per_binding = bindings as f64 * params.c_call_ms;
    let dictionary = params.c_call_ms + cardinality as f64 * params.c_item_ms;
    if per_binding < dictionary {
        (PlanShape::PerBinding, per_binding)
    } else {
        (PlanShape::Dictionary, dictionary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardinalityEstimate {
    pub count: u64,
    /// True when the endpoint count failed and the model cardinality was
    /// used as an upper bound instead.
    pub estimated: bool,
}

/// Distinct-subject count for a group's subject variable over the data
/// patterns, via a COUNT query; falls back to the model cardinality.
pub fn estimate_cardinality(
    ast: &SparqlMlAst,
    subject_var: &str,
    backend: &dyn SparqlBackend,
    fallback: u64,
) -> CardinalityEstimate {
    if ast.data_patterns.is_empty() {
        return CardinalityEstimate {
            count: fallback,
            estimated: true,
        };
    }
    let mut query = String::new();
    for (name, iri) in &ast.prefixes {
        query.push_str(&format!("PREFIX {name}: <{iri}>\n"));
    }
    query.push_str(&format!("SELECT (COUNT(DISTINCT ?{subject_var}) AS ?n)\nWHERE {{\n"));
    for p in &ast.data_patterns {
        query.push_str(&render_pattern(p, &ast.prefixes));
    }
    query.push('}');
    let parse_count = |table: BindingTable| -> Option<u64> {
        table
            .rows
            .first()?
            .get("n")
            .and_then(|t| t.as_literal_lexical())
            .and_then(|s| s.parse().ok())
    };
    match backend.select(&query).ok().and_then(parse_count) {
        Some(count) => CardinalityEstimate {
            count,
            estimated: false,
        },
        None => CardinalityEstimate {
            count: fallback,
            estimated: true,
        },
    }
}

fn render_term(t: &Term, prefixes: &IndexMap<String, String>) -> String {
    match t {
        Term::Iri(iri) if iri == crate::rdf::RDF_TYPE => "a".to_string(),
        Term::Iri(iri) => compact_iri(iri, prefixes),
        other => other.to_string(),
    }
}

fn render_pattern(p: &TriplePattern, prefixes: &IndexMap<String, String>) -> String {
    format!(
        "  {} {} {} .\n",
        render_term(&p.subject, prefixes),
        render_term(&p.predicate, prefixes),
        render_term(&p.object, prefixes)
    )
}

/// One inference call series in a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCall {
    pub predicate_var: String,
    pub subject_var: String,
    pub object_var: String,
    pub task: TaskType,
    pub model_uri: String,
    pub artifact_ref: String,
    pub shape: PlanShape,
    pub top_k: usize,
    pub bindings: CardinalityEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    /// Pure data-retrieval SPARQL; carries no model vocabulary.
    pub data_query: String,
    pub calls: Vec<GroupCall>,
    /// Dictionary groups count 1; per-binding groups count their
    /// binding estimate.
    pub estimated_calls: u64,
    pub estimated_cost_ms: f64,
}

/// Variables the data query must return: group subjects first, then the
/// projected data variables.
fn data_projection(ast: &SparqlMlAst) -> Vec<String> {
    let predicted: BTreeSet<&String> = ast
        .gml_patterns
        .iter()
        .filter_map(|g| g.object_var.as_ref())
        .collect();
    let mut vars: Vec<String> = Vec::new();
    for g in &ast.gml_patterns {
        if let Some(s) = &g.subject_var {
            if !vars.contains(s) {
                vars.push(s.clone());
            }
        }
    }
    for v in &ast.projection {
        if !predicted.contains(v) && !vars.contains(v) {
            vars.push(v.clone());
        }
    }
    vars
}

/// Rewrites the AST into a plain-SPARQL data query plus a call manifest.
pub fn rewrite(
    ast: &SparqlMlAst,
    assignment: &[(&UdpGroup, Candidate, PlanShape, CardinalityEstimate)],
) -> QueryPlan {
    let mut query = String::new();
    for (name, iri) in &ast.prefixes {
        if name == "kgnet" {
            continue; // the data query carries no model vocabulary
        }
        query.push_str(&format!("PREFIX {name}: <{iri}>\n"));
    }
    let projection = if ast.gml_patterns.is_empty() {
        ast.projection.clone()
    } else {
        data_projection(ast)
    };
    let vars: Vec<String> = projection.iter().map(|v| format!("?{v}")).collect();
    query.push_str(&format!("SELECT {}\nWHERE {{\n", vars.join(" ")));
    for p in &ast.data_patterns {
        query.push_str(&render_pattern(p, &ast.prefixes));
    }
    query.push('}');

    let mut calls = Vec::new();
    let mut estimated_calls = 0u64;
    let mut estimated_cost_ms = 0.0;
    for (group, candidate, shape, bindings) in assignment {
        let top_k = group.top_k().unwrap_or(10) as usize;
        calls.push(GroupCall {
            predicate_var: group.predicate_var.clone(),
            subject_var: group.subject_var.clone().unwrap_or_default(),
            object_var: group.object_var.clone().unwrap_or_default(),
            task: group.task_type,
            model_uri: candidate.model_uri.clone(),
            artifact_ref: candidate.artifact_ref.clone(),
            shape: *shape,
            top_k,
            bindings: *bindings,
        });
        estimated_calls += match shape {
            PlanShape::Dictionary => 1,
            PlanShape::PerBinding => bindings.count,
        };
        estimated_cost_ms += choose_plan_cost(*shape, bindings.count, candidate.cardinality);
    }
    QueryPlan {
        data_query: query,
        calls,
        estimated_calls,
        estimated_cost_ms,
    }
}

fn choose_plan_cost(shape: PlanShape, bindings: u64, cardinality: u64) -> f64 {
    let params = CostModelParams::default();
    match shape {
        PlanShape::PerBinding => bindings as f64 * params.c_call_ms,
        PlanShape::Dictionary => params.c_call_ms + cardinality as f64 * params.c_item_ms,
    }
}

/// Inference transport, abstracted so executions can be counted and
/// faulted in tests.
pub trait InferenceClient {
    fn node_class(&self, artifact_ref: &str, targets: &[String])
        -> Result<NodeClassResponse, String>;
    fn links(
        &self,
        artifact_ref: &str,
        sources: &[String],
        k: usize,
    ) -> Result<LinkResponse, String>;
}

impl InferenceClient for GmlService {
    fn node_class(
        &self,
        artifact_ref: &str,
        targets: &[String],
    ) -> Result<NodeClassResponse, String> {
        self.infer_node_class(artifact_ref, targets).map_err(|e| e.to_string())
    }

    fn links(
        &self,
        artifact_ref: &str,
        sources: &[String],
        k: usize,
    ) -> Result<LinkResponse, String> {
        self.infer_links(artifact_ref, sources, k).map_err(|e| e.to_string())
    }
}

pub struct Planner<'a> {
    pub governor: &'a KgMetaGovernor,
    pub backend: &'a dyn SparqlBackend,
    pub inference: &'a dyn InferenceClient,
    pub params: CostModelParams,
    pub objective: Objective,
    /// When set, unresolved inference targets produce rows with the
    /// predicted variable left unbound instead of failing the query.
    pub lenient: bool,
}

impl<'a> Planner<'a> {
    pub fn new(
        governor: &'a KgMetaGovernor,
        backend: &'a dyn SparqlBackend,
        inference: &'a dyn InferenceClient,
    ) -> Planner<'a> {
        Planner {
            governor,
            backend,
            inference,
            params: CostModelParams::default(),
            objective: Objective::default(),
            lenient: false,
        }
    }

    /// Builds the full plan: model choice, binding estimates, shapes,
    /// and the rewritten data query.
    pub fn plan(&self, ast: &SparqlMlAst) -> Result<QueryPlan, PlanError> {
        let mut groups: Vec<(&UdpGroup, Vec<Candidate>)> = Vec::new();
        for group in &ast.gml_patterns {
            let constraints: BTreeMap<_, _> = group
                .constraints
                .iter()
                .map(|(k, v)| (*k, v.clone()))
                .collect();
            let metas = self
                .governor
                .lookup_models(group.task_type, &constraints)?;
            if metas.is_empty() {
                return Err(PlanError::NoModelMatches(group.predicate_var.clone()));
            }
            groups.push((group, metas.iter().map(Candidate::from).collect()));
        }
        let problem = ModelChoiceProblem {
            groups: groups.iter().map(|(_, c)| c.clone()).collect(),
            objective: self.objective,
        };
        let assignment = if groups.is_empty() {
            Vec::new()
        } else {
            let solution = select_models(&problem)?;
            groups
                .iter()
                .zip(&solution.chosen)
                .map(|((group, candidates), idx)| {
                    let candidate = candidates[*idx].clone();
                    let bindings = match &group.subject_var {
                        Some(s) => estimate_cardinality(
                            ast,
                            s,
                            self.backend,
                            candidate.cardinality,
                        ),
                        None => CardinalityEstimate {
                            count: candidate.cardinality,
                            estimated: true,
                        },
                    };
                    let (shape, _) =
                        choose_plan(bindings.count, candidate.cardinality, &self.params);
                    (*group, candidate, shape, bindings)
                })
                .collect()
        };
        Ok(rewrite(ast, &assignment))
    }

    /// Plans and runs the query, returning the joined result table.
    pub fn execute(&self, ast: &SparqlMlAst) -> Result<BindingTable, PlanError> {
        let plan = self.plan(ast)?;
        self.run(ast, &plan)
    }

    pub fn run(&self, ast: &SparqlMlAst, plan: &QueryPlan) -> Result<BindingTable, PlanError> {
        let data = self.backend.select(&plan.data_query)?;
        let mut rows: Vec<BTreeMap<String, Term>> = data.rows;
        if rows.is_empty() {
            let mut empty = BindingTable::new(ast.projection.clone());
            empty.sort_rows();
            return Ok(empty);
        }

        for call in &plan.calls {
            // distinct subject keys, sorted — the binding count
            let subjects: BTreeSet<String> = rows
                .iter()
                .filter_map(|r| r.get(&call.subject_var))
                .filter_map(|t| t.as_iri().map(str::to_string))
                .collect();
            let targets: Vec<String> = subjects.into_iter().collect();
            match call.task {
                TaskType::NodeClassifier | TaskType::NodeSimilarity => {
                    let response = self.fetch_node_class(call, &targets)?;
                    if !self.lenient && !response.unresolved.is_empty() {
                        return Err(PlanError::Unresolved(response.unresolved));
                    }
                    rows = rows
                        .into_iter()
                        .filter_map(|mut row| {
                            let key = row
                                .get(&call.subject_var)
                                .and_then(|t| t.as_iri())
                                .map(str::to_string)?;
                            match response.predictions.get(&key) {
                                Some(label) => {
                                    let term = parse_key(label).ok()?;
                                    row.insert(call.object_var.clone(), term);
                                    Some(row)
                                }
                                // lenient mode: row kept, variable unbound
                                None => self.lenient.then_some(row),
                            }
                        })
                        .collect();
                }
                TaskType::LinkPredictor => {
                    let response = self.fetch_links(call, &targets)?;
                    if !self.lenient && !response.unresolved.is_empty() {
                        return Err(PlanError::Unresolved(response.unresolved));
                    }
                    let mut expanded = Vec::new();
                    for row in rows {
                        let key = row
                            .get(&call.subject_var)
                            .and_then(|t| t.as_iri())
                            .map(str::to_string);
                        let Some(key) = key else { continue };
                        match response.predictions.get(&key) {
                            Some(links) => {
                                for link in links {
                                    let Ok(term) = parse_key(link) else { continue };
                                    let mut r = row.clone();
                                    r.insert(call.object_var.clone(), term);
                                    expanded.push(r);
                                }
                            }
                            None if self.lenient => expanded.push(row),
                            None => {}
                        }
                    }
                    rows = expanded;
                }
            }
        }

        let all_vars: BTreeSet<String> = rows.iter().flat_map(|r| r.keys().cloned()).collect();
        let mut table = BindingTable {
            variables: all_vars.into_iter().collect(),
            rows,
        };
        table = table.project(&ast.projection);
        table.sort_rows();
        Ok(table)
    }

    fn fetch_node_class(
        &self,
        call: &GroupCall,
        targets: &[String],
    ) -> Result<NodeClassResponse, PlanError> {
        match call.shape {
            PlanShape::Dictionary => self
                .inference
                .node_class(&call.artifact_ref, targets)
                .map_err(PlanError::Inference),
            PlanShape::PerBinding => {
                let mut merged = NodeClassResponse::default();
                for target in targets {
                    let one = self
                        .inference
                        .node_class(&call.artifact_ref, std::slice::from_ref(target))
                        .map_err(PlanError::Inference)?;
                    merged.predictions.extend(one.predictions);
                    merged.unresolved.extend(one.unresolved);
                }
                Ok(merged)
            }
        }
    }

    fn fetch_links(
        &self,
        call: &GroupCall,
        targets: &[String],
    ) -> Result<LinkResponse, PlanError> {
        match call.shape {
            PlanShape::Dictionary => self
                .inference
                .links(&call.artifact_ref, targets, call.top_k)
                .map_err(PlanError::Inference),
            PlanShape::PerBinding => {
                let mut merged = LinkResponse::default();
                for target in targets {
                    let one = self
                        .inference
                        .links(&call.artifact_ref, std::slice::from_ref(target), call.top_k)
                        .map_err(PlanError::Inference)?;
                    merged.predictions.extend(one.predictions);
                    merged.unresolved.extend(one.unresolved);
                }
                Ok(merged)
            }
        }
    }
}
