//! TrainGML payload parsing.
//!
//! The payload is "JSON as printed": keys may be unquoted (and may contain
//! spaces, e.g. `Task Budget`), strings may use single quotes, and leaf
//! values may be bare words like `dblp:venue` or `50GB`.

use indexmap::IndexMap;

use crate::rdf::KGNET_NS;

use super::ast::{Budget, Priority, TaskType, TrainGmlSpec};

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Obj(IndexMap<String, Value>),
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
}

impl Reader {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn parse_object(&mut self) -> Result<IndexMap<String, Value>, String> {
        self.skip_ws();
        if self.bump() != Some('{') {
            return Err("expected '{'".into());
        }
        let mut map = IndexMap::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some('}') => {
                    self.bump();
                    return Ok(map);
                }
                Some(',') => {
                    self.bump();
                    continue;
                }
                None => return Err("unterminated object".into()),
                _ => {}
            }
            let key = self.parse_key()?;
            self.skip_ws();
            if self.bump() != Some(':') {
                return Err(format!("expected ':' after key {key:?}"));
            }
            let value = self.parse_value()?;
            map.insert(key, value);
        }
    }

    fn parse_key(&mut self) -> Result<String, String> {
        self.skip_ws();
        match self.peek() {
            Some(q @ ('"' | '\'')) => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some(c) if c == q => return Ok(s),
                        Some(c) => s.push(c),
                        None => return Err("unterminated key string".into()),
                    }
                }
            }
            _ => {
                let mut s = String::new();
                while self.peek().is_some_and(|c| c != ':' && c != '}' && c != ',') {
                    s.push(self.bump().unwrap());
                }
                let s = s.trim().to_string();
                if s.is_empty() {
                    Err("empty object key".into())
                } else {
                    Ok(s)
                }
            }
        }
    }

    fn parse_value(&mut self) -> Result<Value, String> {
        self.skip_ws();
        match self.peek() {
            Some('{') => Ok(Value::Obj(self.parse_object()?)),
            Some(q @ ('"' | '\'')) => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some(c) if c == q => return Ok(Value::Str(s)),
                        Some(c) => s.push(c),
                        None => return Err("unterminated string value".into()),
                    }
                }
            }
            None => Err("missing value".into()),
            _ => {
                let mut s = String::new();
                while self.peek().is_some_and(|c| c != ',' && c != '}') {
                    s.push(self.bump().unwrap());
                }
                Ok(Value::Str(s.trim().to_string()))
            }
        }
    }
}

fn get<'a>(map: &'a IndexMap<String, Value>, key: &str) -> Option<&'a Value> {
    map.iter()
        .find(|(k, _)| {
            let norm = |s: &str| s.replace([' ', '-', '_'], "").to_ascii_lowercase();
            norm(k) == norm(key)
        })
        .map(|(_, v)| v)
}

fn get_str(map: &IndexMap<String, Value>, key: &str) -> Result<String, String> {
    match get(map, key) {
        Some(Value::Str(s)) => Ok(s.clone()),
        Some(Value::Obj(_)) => Err(format!("key {key:?} must be a string")),
        None => Err(format!("missing key {key:?}")),
    }
}

fn get_obj<'a>(
    map: &'a IndexMap<String, Value>,
    key: &str,
) -> Result<&'a IndexMap<String, Value>, String> {
    match get(map, key) {
        Some(Value::Obj(o)) => Ok(o),
        Some(Value::Str(_)) => Err(format!("key {key:?} must be an object")),
        None => Err(format!("missing key {key:?}")),
    }
}

/// `50GB` -> 50 GiB in bytes. Bare numbers are bytes.
pub fn parse_memory(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit() && c != '.').unwrap_or(s.len());
    let (num, suffix) = s.split_at(split);
    let num: f64 = num
        .parse()
        .map_err(|_| format!("unparseable memory amount {s:?}"))?;
    let mult: u64 = match suffix.trim().to_ascii_uppercase().as_str() {
        "" | "B" => 1,
        "KB" | "KIB" => 1 << 10,
        "MB" | "MIB" => 1 << 20,
        "GB" | "GIB" => 1 << 30,
        "TB" | "TIB" => 1 << 40,
        other => return Err(format!("unknown memory unit {other:?}")),
    };
    let bytes = num * mult as f64;
    if bytes <= 0.0 {
        return Err(format!("memory budget must be positive, got {s:?}"));
    }
    Ok(bytes as u64)
}

/// `1h` -> 3600, `90m` -> 5400. Bare numbers are seconds.
pub fn parse_duration(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit() && c != '.').unwrap_or(s.len());
    let (num, suffix) = s.split_at(split);
    let num: f64 = num
        .parse()
        .map_err(|_| format!("unparseable duration {s:?}"))?;
    let mult: u64 = match suffix.trim().to_ascii_lowercase().as_str() {
        "" | "s" | "sec" | "seconds" => 1,
        "m" | "min" | "minutes" => 60,
        "h" | "hour" | "hours" => 3600,
        "d" | "day" | "days" => 86400,
        other => return Err(format!("unknown time unit {other:?}")),
    };
    let secs = num * mult as f64;
    if secs <= 0.0 {
        return Err(format!("time budget must be positive, got {s:?}"));
    }
    Ok(secs as u64)
}

fn parse_priority(s: &str) -> Result<Priority, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "modelscore" => Ok(Priority::ModelScore),
        "trainingtime" => Ok(Priority::TrainingTime),
        "memory" => Ok(Priority::Memory),
        other => Err(format!("unknown budget priority {other:?}")),
    }
}

fn expand_iri(s: &str, prefixes: &IndexMap<String, String>) -> Result<String, String> {
    let s = s.trim();
    if s.starts_with('<') && s.ends_with('>') {
        return Ok(s[1..s.len() - 1].to_string());
    }
    if s.contains("://") {
        return Ok(s.to_string());
    }
    match s.split_once(':') {
        Some((prefix, local)) => match prefixes.get(prefix) {
            Some(base) => Ok(format!("{base}{local}")),
            None => Err(format!("unknown prefix in {s:?}")),
        },
        None => Err(format!("not an IRI or prefixed name: {s:?}")),
    }
}

fn parse_task_type(s: &str, prefixes: &IndexMap<String, String>) -> Result<TaskType, String> {
    let name = if let Some(local) = s.trim().strip_prefix("kgnet:") {
        local.to_string()
    } else if let Ok(iri) = expand_iri(s, prefixes) {
        iri.strip_prefix(KGNET_NS).unwrap_or(&iri).to_string()
    } else {
        s.trim().to_string()
    };
    TaskType::from_name(&name).ok_or_else(|| format!("unknown TaskType {s:?}"))
}

pub fn default_prefixes() -> IndexMap<String, String> {
    IndexMap::from([
        ("dblp".to_string(), "https://www.dblp.org/".to_string()),
        ("kgnet".to_string(), KGNET_NS.to_string()),
    ])
}

/// Parses a TrainGML payload with the caller's prefix map.
pub fn parse_train_json_with_prefixes(
    text: &str,
    prefixes: &IndexMap<String, String>,
) -> Result<TrainGmlSpec, String> {
    let mut reader = Reader {
        chars: text.chars().collect(),
        pos: 0,
    };
    let root = reader.parse_object()?;
    reader.skip_ws();
    if reader.peek().is_some() {
        return Err("trailing content after payload object".into());
    }

    let name = get_str(&root, "Name")?;
    let task = get_obj(&root, "GML-Task")?;
    let budget_obj = get_obj(&root, "Task Budget")?;

    let task_type = parse_task_type(&get_str(task, "TaskType")?, prefixes)?;

    let budget = Budget {
        max_memory_bytes: parse_memory(&get_str(budget_obj, "MaxMemory")?)?,
        max_time_seconds: parse_duration(&get_str(budget_obj, "MaxTime")?)?,
        priority: parse_priority(&get_str(budget_obj, "Priority")?)?,
    };

    let mut spec = TrainGmlSpec {
        name,
        task_type,
        target_node_type: String::new(),
        label_predicate: None,
        source_node_type: None,
        destination_node_type: None,
        budget,
        hyperparams: IndexMap::new(),
        method_override: None,
        sampling_override: None,
    };

    match task_type {
        TaskType::NodeClassifier => {
            spec.target_node_type = expand_iri(&get_str(task, "TargetNode")?, prefixes)?;
            // "NodeLable" as printed upstream is accepted via key normalization
            let label = get_str(task, "NodeLabel").or_else(|_| get_str(task, "NodeLable"))?;
            spec.label_predicate = Some(expand_iri(&label, prefixes)?);
        }
        TaskType::LinkPredictor => {
            let source = expand_iri(&get_str(task, "SourceNode")?, prefixes)?;
            let dest = expand_iri(&get_str(task, "DestinationNode")?, prefixes)?;
            spec.target_node_type = source.clone();
            spec.source_node_type = Some(source);
            spec.destination_node_type = Some(dest);
        }
        TaskType::NodeSimilarity => {
            spec.target_node_type = expand_iri(&get_str(task, "TargetNode")?, prefixes)?;
        }
    }

    if let Ok(method) = get_str(task, "Method").or_else(|_| get_str(&root, "Method")) {
        spec.method_override = Some(method);
    }
    if let Some(Value::Obj(hp)) = get(&root, "Hyperparams") {
        for (k, v) in hp {
            if let Value::Str(s) = v {
                spec.hyperparams.insert(k.clone(), s.clone());
            }
        }
    }
    if let Some(Value::Obj(s)) = get(&root, "Sampling") {
        let d: u8 = get_str(s, "d")?.parse().map_err(|_| "bad sampling d")?;
        let h: u8 = get_str(s, "h")?.parse().map_err(|_| "bad sampling h")?;
        spec.sampling_override = Some((d, h));
    }

    Ok(spec)
}

/// Parses a standalone TrainGML payload with the default prefixes.
pub fn parse_train_json(text: &str) -> Result<TrainGmlSpec, String> {
    parse_train_json_with_prefixes(text, &default_prefixes())
}
