//! Canonical text rendering of SPARQL-ML ASTs. `parse(render(ast))` is
//! structurally the identity.

use indexmap::IndexMap;

use crate::rdf::term::{XSD_DOUBLE, XSD_INTEGER};
use crate::rdf::{Term, TriplePattern, RDF_TYPE};

use super::ast::{QueryKind, SparqlMlAst, TaskType, TrainGmlSpec, UdpGroup};

fn compactable_local(local: &str) -> bool {
    !local.is_empty()
        && local
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_')
        && local
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '/')
        && !local.ends_with('/')
}

/// Renders an IRI in prefixed form when a prefix covers it cleanly.
pub fn compact_iri(iri: &str, prefixes: &IndexMap<String, String>) -> String {
    let mut best: Option<(&str, &str)> = None;
    for (name, base) in prefixes {
        if let Some(local) = iri.strip_prefix(base.as_str()) {
            if compactable_local(local)
                && best.is_none_or(|(_, b)| base.len() > prefixes[b].len())
            {
                best = Some((local, name));
            }
        }
    }
    match best {
        Some((local, name)) => format!("{name}:{local}"),
        None => format!("<{iri}>"),
    }
}

fn render_term(t: &Term, prefixes: &IndexMap<String, String>, predicate_pos: bool) -> String {
    match t {
        Term::Iri(iri) if predicate_pos && iri == RDF_TYPE => "a".to_string(),
        Term::Iri(iri) => compact_iri(iri, prefixes),
        Term::Literal {
            lexical,
            datatype: Some(dt),
            lang: None,
        } if (dt == XSD_INTEGER || dt == XSD_DOUBLE)
            && lexical.parse::<f64>().is_ok()
            && !lexical.starts_with('-') =>
        {
            lexical.clone()
        }
        other => other.to_string(),
    }
}

fn render_pattern(p: &TriplePattern, prefixes: &IndexMap<String, String>) -> String {
    format!(
        "  {} {} {} .",
        render_term(&p.subject, prefixes, false),
        render_term(&p.predicate, prefixes, true),
        render_term(&p.object, prefixes, false)
    )
}

fn render_group(g: &UdpGroup, prefixes: &IndexMap<String, String>, out: &mut Vec<String>) {
    if let (Some(s), Some(o)) = (&g.subject_var, &g.object_var) {
        out.push(format!("  ?{s} ?{} ?{o} .", g.predicate_var));
    }
    out.push(format!(
        "  ?{} a kgnet:{} .",
        g.predicate_var,
        g.task_type.as_str()
    ));
    for (key, value) in &g.constraints {
        out.push(format!(
            "  ?{} kgnet:{} {} .",
            g.predicate_var,
            key.local_name(),
            render_term(value, prefixes, false)
        ));
    }
}

fn render_train_payload(spec: &TrainGmlSpec) -> String {
    let mut task = format!("\"TaskType\": \"kgnet:{}\"", spec.task_type.as_str());
    match spec.task_type {
        TaskType::NodeClassifier | TaskType::NodeSimilarity => {
            task.push_str(&format!(", \"TargetNode\": \"<{}>\"", spec.target_node_type));
            if let Some(label) = &spec.label_predicate {
                task.push_str(&format!(", \"NodeLabel\": \"<{label}>\""));
            }
        }
        TaskType::LinkPredictor => {
            task.push_str(&format!(
                ", \"SourceNode\": \"<{}>\"",
                spec.source_node_type.as_deref().unwrap_or_default()
            ));
            task.push_str(&format!(
                ", \"DestinationNode\": \"<{}>\"",
                spec.destination_node_type.as_deref().unwrap_or_default()
            ));
        }
    }
    if let Some(method) = &spec.method_override {
        task.push_str(&format!(", \"Method\": \"{method}\""));
    }
    let mut payload = format!(
        "{{\"Name\": \"{}\", \"GML-Task\": {{{task}}}, \"Task Budget\": {{\"MaxMemory\": \"{}B\", \"MaxTime\": \"{}s\", \"Priority\": \"{:?}\"}}",
        spec.name, spec.budget.max_memory_bytes, spec.budget.max_time_seconds, spec.budget.priority
    );
    if !spec.hyperparams.is_empty() {
        let fields: Vec<String> = spec
            .hyperparams
            .iter()
            .map(|(k, v)| format!("\"{k}\": \"{v}\""))
            .collect();
        payload.push_str(&format!(", \"Hyperparams\": {{{}}}", fields.join(", ")));
    }
    if let Some((d, h)) = spec.sampling_override {
        payload.push_str(&format!(", \"Sampling\": {{\"d\": \"{d}\", \"h\": \"{h}\"}}"));
    }
    payload.push('}');
    payload
}

/// Renders an AST as canonical SPARQL-ML text.
pub fn render(ast: &SparqlMlAst) -> String {
    let mut lines: Vec<String> = ast
        .prefixes
        .iter()
        .map(|(name, iri)| format!("PREFIX {name}: <{iri}>"))
        .collect();
    match ast.kind {
        QueryKind::Select => {
            let projection: Vec<String> =
                ast.projection.iter().map(|v| format!("?{v}")).collect();
            lines.push(format!("SELECT {}", projection.join(" ")));
            lines.push("WHERE {".to_string());
            for p in &ast.data_patterns {
                lines.push(render_pattern(p, &ast.prefixes));
            }
            for g in &ast.gml_patterns {
                render_group(g, &ast.prefixes, &mut lines);
            }
            lines.push("}".to_string());
        }
        QueryKind::DeleteModel => {
            lines.push("DELETE WHERE {".to_string());
            for g in &ast.gml_patterns {
                render_group(g, &ast.prefixes, &mut lines);
            }
            lines.push("}".to_string());
        }
        QueryKind::InsertTrain => {
            lines.push("INSERT INTO <kgnet> { ?s ?p ?o }".to_string());
            let payload = ast
                .train_payload
                .as_ref()
                .map(render_train_payload)
                .unwrap_or_else(|| "{}".to_string());
            lines.push(format!("WHERE {{ SELECT * FROM TrainGML({payload}) }}"));
        }
    }
    lines.join("\n")
}
