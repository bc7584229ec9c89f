//! RDF terms, triples, and triple patterns.

use std::fmt;

use serde::{Deserialize, Serialize};

/// An RDF term. `Variable` only appears inside patterns, never in stored data.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Iri(String),
    Literal {
        lexical: String,
        datatype: Option<String>,
        lang: Option<String>,
    },
    Variable(String),
    Blank(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Term {
        Term::Iri(s.into())
    }

    pub fn var(s: impl Into<String>) -> Term {
        Term::Variable(s.into())
    }

    pub fn blank(s: impl Into<String>) -> Term {
        Term::Blank(s.into())
    }

    /// A plain (untyped, language-less) literal.
    pub fn literal(s: impl Into<String>) -> Term {
        Term::Literal {
            lexical: s.into(),
            datatype: None,
            lang: None,
        }
    }

    pub fn typed_literal(s: impl Into<String>, datatype: impl Into<String>) -> Term {
        Term::Literal {
            lexical: s.into(),
            datatype: Some(datatype.into()),
            lang: None,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_variable(&self) -> Option<&str> {
        match self {
            Term::Variable(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_literal_lexical(&self) -> Option<&str> {
        match self {
            Term::Literal { lexical, .. } => Some(lexical),
            _ => None,
        }
    }

    /// Validity per the data model: absolute IRIs, non-empty whitespace-free
    /// variable names, non-empty blank labels.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Term::Iri(s) => {
                let scheme_ok = s
                    .split_once(':')
                    .map(|(scheme, _)| {
                        !scheme.is_empty()
                            && scheme.chars().all(|c| c.is_ascii_alphanumeric() || c == '+' || c == '-' || c == '.')
                            && scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    })
                    .unwrap_or(false);
                if scheme_ok {
                    Ok(())
                } else {
                    Err(format!("IRI is not absolute: {s:?}"))
                }
            }
            Term::Variable(name) => {
                if name.is_empty() || name.chars().any(char::is_whitespace) {
                    Err(format!("invalid variable name: {name:?}"))
                } else {
                    Ok(())
                }
            }
            Term::Blank(label) => {
                if label.is_empty() {
                    Err("empty blank node label".into())
                } else {
                    Ok(())
                }
            }
            Term::Literal { .. } => Ok(()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(s) => write!(f, "<{s}>"),
            Term::Literal {
                lexical,
                datatype,
                lang,
            } => {
                write!(f, "\"{}\"", escape_literal(lexical))?;
                if let Some(lang) = lang {
                    write!(f, "@{lang}")
                } else if let Some(dt) = datatype {
                    write!(f, "^^<{dt}>")
                } else {
                    Ok(())
                }
            }
            Term::Variable(name) => write!(f, "?{name}"),
            Term::Blank(label) => write!(f, "_:{label}"),
        }
    }
}

pub(crate) fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// A ground RDF statement. Construction enforces position constraints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Triple, String> {
        match &subject {
            Term::Iri(_) | Term::Blank(_) => subject.validate()?,
            other => return Err(format!("triple subject must be IRI or blank, got {other}")),
        }
        match &predicate {
            Term::Iri(_) => predicate.validate()?,
            other => return Err(format!("triple predicate must be an IRI, got {other}")),
        }
        match &object {
            Term::Variable(_) => return Err("triple object must be ground".into()),
            other => other.validate()?,
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// A triple whose positions may hold variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> TriplePattern {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms()
            .into_iter()
            .filter_map(Term::as_variable)
            .collect::<Vec<_>>()
            .into_iter()
    }

    pub fn is_ground(&self) -> bool {
        self.terms().iter().all(|t| !t.is_variable())
    }

    /// Converts a ground pattern into a triple.
    pub fn to_triple(&self) -> Result<Triple, String> {
        Triple::new(
            self.subject.clone(),
            self.predicate.clone(),
            self.object.clone(),
        )
    }
}

impl From<Triple> for TriplePattern {
    fn from(t: Triple) -> TriplePattern {
        TriplePattern {
            subject: t.subject,
            predicate: t.predicate,
            object: t.object,
        }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// Well-known vocabulary.
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
pub const KGNET_NS: &str = "https://www.kgnet.com/";
