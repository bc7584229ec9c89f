//! SPARQL 1.1 JSON results format: serialization of binding tables and
//! parsing of endpoint responses.

use std::collections::BTreeMap;

use kgnet_core::rdf::{BindingTable, Term};
use serde_json::{json, Map, Value};

fn term_to_json(term: &Term) -> Value {
    match term {
        Term::Iri(iri) => json!({ "type": "uri", "value": iri }),
        Term::Blank(label) => json!({ "type": "bnode", "value": label }),
        Term::Literal {
            lexical,
            datatype,
            lang,
        } => {
            let mut m = Map::new();
            m.insert("type".into(), "literal".into());
            m.insert("value".into(), lexical.as_str().into());
            if let Some(lang) = lang {
                m.insert("xml:lang".into(), lang.as_str().into());
            } else if let Some(dt) = datatype {
                m.insert("datatype".into(), dt.as_str().into());
            }
            Value::Object(m)
        }
        Term::Variable(v) => json!({ "type": "literal", "value": format!("?{v}") }),
    }
}

fn term_from_json(v: &Value) -> Result<Term, String> {
    let obj = v.as_object().ok_or("binding is not an object")?;
    let value = obj
        .get("value")
        .and_then(Value::as_str)
        .ok_or("binding lacks a value")?;
    match obj.get("type").and_then(Value::as_str) {
        Some("uri") => Ok(Term::iri(value)),
        Some("bnode") => Ok(Term::blank(value)),
        // "typed-literal" is the legacy Virtuoso spelling
        Some("literal") | Some("typed-literal") => Ok(Term::Literal {
            lexical: value.to_string(),
            datatype: obj
                .get("datatype")
                .and_then(Value::as_str)
                .map(str::to_string),
            lang: obj
                .get("xml:lang")
                .and_then(Value::as_str)
                .map(str::to_string),
        }),
        other => Err(format!("unknown binding type {other:?}")),
    }
}

/// Renders a table in the standard SELECT results JSON shape.
pub fn table_to_json(table: &BindingTable) -> Value {
    let bindings: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let m: Map<String, Value> = table
                .variables
                .iter()
                .filter_map(|v| row.get(v).map(|t| (v.clone(), term_to_json(t))))
                .collect();
            Value::Object(m)
        })
        .collect();
    json!({
        "head": { "vars": table.variables },
        "results": { "bindings": bindings },
    })
}

/// Parses a standard SELECT results JSON document.
pub fn table_from_json(v: &Value) -> Result<BindingTable, String> {
    let vars: Vec<String> = v["head"]["vars"]
        .as_array()
        .ok_or("missing head.vars")?
        .iter()
        .map(|x| x.as_str().map(str::to_string).ok_or("non-string variable"))
        .collect::<Result<_, _>>()?;
    let bindings = v["results"]["bindings"]
        .as_array()
        .ok_or("missing results.bindings")?;
    let mut table = BindingTable::new(vars);
    for b in bindings {
        let obj = b.as_object().ok_or("binding row is not an object")?;
        let mut row = BTreeMap::new();
        for (var, term) in obj {
            row.insert(var.clone(), term_from_json(term)?);
        }
        table.rows.push(row);
    }
    Ok(table)
}
