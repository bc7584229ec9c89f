//! Recursive-descent parser for the SPARQL-ML dialect.

use indexmap::IndexMap;
use thiserror::Error;

use crate::rdf::{Term, TriplePattern, KGNET_NS, RDF_TYPE};

use super::ast::{
    ConstraintKey, QueryKind, SparqlMlAst, TaskType, UdpGroup,
};
use super::lex::{LexError, Lexer, Token, TokenKind};
use super::train;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error("train payload: {0}")]
    TrainPayload(String),
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> ParseError {
        ParseError::Syntax {
            line: e.line,
            column: e.column,
            message: e.message,
        }
    }
}

pub(crate) struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Option<Token>>,
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str) -> Parser<'a> {
        Parser {
            lexer: Lexer::new(src),
            peeked: None,
        }
    }

    pub fn peek(&mut self) -> Result<Option<&Token>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().unwrap().as_ref())
    }

    pub fn next(&mut self) -> Result<Option<Token>, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => Ok(self.lexer.next_token()?),
        }
    }

    pub fn error_here(&mut self, message: impl Into<String>) -> ParseError {
        let (line, column) = match self.peek() {
            Ok(Some(t)) => (t.line, t.column),
            _ => (0, 0),
        };
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.next()? {
            Some(Token {
                kind: TokenKind::Punct(got),
                ..
            }) if got == c => Ok(()),
            Some(t) => Err(ParseError::Syntax {
                line: t.line,
                column: t.column,
                message: format!("expected {c:?}, found {:?}", t.kind),
            }),
            None => Err(ParseError::Semantic(format!(
                "expected {c:?}, found end of input"
            ))),
        }
    }

    /// Consumes a keyword case-insensitively.
    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.next()? {
            Some(Token {
                kind: TokenKind::Word(w),
                ..
            }) if w.eq_ignore_ascii_case(kw) => Ok(()),
            Some(t) => Err(ParseError::Syntax {
                line: t.line,
                column: t.column,
                message: format!("expected keyword {kw:?}, found {:?}", t.kind),
            }),
            None => Err(ParseError::Semantic(format!(
                "expected keyword {kw:?}, found end of input"
            ))),
        }
    }

    pub fn peek_keyword(&mut self, kw: &str) -> Result<bool, ParseError> {
        Ok(matches!(
            self.peek()?,
            Some(Token {
                kind: TokenKind::Word(w),
                ..
            }) if w.eq_ignore_ascii_case(kw)
        ))
    }

    pub fn capture_payload(&mut self) -> Result<String, ParseError> {
        assert!(self.peeked.is_none(), "payload capture with pending token");
        Ok(self.lexer.capture_braced_payload()?)
    }

    /// `PREFIX name: <iri>` headers.
    pub fn parse_prefixes(&mut self) -> Result<IndexMap<String, String>, ParseError> {
        let mut prefixes = IndexMap::new();
        while self.peek_keyword("prefix")? {
            self.next()?;
            let name = match self.next()? {
                Some(Token {
                    kind: TokenKind::Word(w),
                    ..
                }) => w.trim_end_matches(':').to_string(),
                other => {
                    return Err(ParseError::Semantic(format!(
                        "expected prefix name, found {other:?}"
                    )))
                }
            };
            let iri = match self.next()? {
                Some(Token {
                    kind: TokenKind::Iri(iri),
                    ..
                }) => iri,
                other => {
                    return Err(ParseError::Semantic(format!(
                        "expected <IRI> for prefix {name:?}, found {other:?}"
                    )))
                }
            };
            prefixes.insert(name, iri);
        }
        Ok(prefixes)
    }

    fn resolve_word(
        &self,
        word: &str,
        prefixes: &IndexMap<String, String>,
        line: usize,
        column: usize,
    ) -> Result<Term, ParseError> {
        if word == "a" {
            return Ok(Term::iri(RDF_TYPE));
        }
        match word.split_once(':') {
            Some((prefix, local)) => match prefixes.get(prefix) {
                Some(base) => Ok(Term::iri(format!("{base}{local}"))),
                None => Err(ParseError::Syntax {
                    line,
                    column,
                    message: format!("unknown prefix {prefix:?}"),
                }),
            },
            None => Err(ParseError::Syntax {
                line,
                column,
                message: format!("unexpected word {word:?} in pattern position"),
            }),
        }
    }

    fn parse_pattern_term(
        &mut self,
        prefixes: &IndexMap<String, String>,
    ) -> Result<Term, ParseError> {
        match self.next()? {
            Some(Token {
                kind, line, column, ..
            }) => match kind {
                TokenKind::Iri(iri) => Ok(Term::Iri(iri)),
                TokenKind::Word(w) => self.resolve_word(&w, prefixes, line, column),
                TokenKind::Variable(name) => Ok(Term::Variable(name)),
                TokenKind::Blank(label) => Ok(Term::Blank(label)),
                TokenKind::Literal {
                    lexical,
                    datatype,
                    lang,
                } => Ok(Term::Literal {
                    lexical,
                    datatype,
                    lang,
                }),
                TokenKind::Number(n) => {
                    let dt = if n.contains('.') {
                        crate::rdf::term::XSD_DOUBLE
                    } else {
                        crate::rdf::term::XSD_INTEGER
                    };
                    Ok(Term::typed_literal(n, dt))
                }
                other => Err(ParseError::Syntax {
                    line,
                    column,
                    message: format!("expected a term, found {other:?}"),
                }),
            },
            None => Err(ParseError::Semantic(
                "expected a term, found end of input".into(),
            )),
        }
    }

    /// Parses triple patterns up to (and consuming) the closing '}'.
    /// The opening '{' must already be consumed.
    pub fn parse_pattern_block(
        &mut self,
        prefixes: &IndexMap<String, String>,
    ) -> Result<Vec<TriplePattern>, ParseError> {
        let mut patterns = Vec::new();
        loop {
            match self.peek()? {
                Some(Token {
                    kind: TokenKind::Punct('}'),
                    ..
                }) => {
                    self.next()?;
                    return Ok(patterns);
                }
                Some(_) => {
                    let s = self.parse_pattern_term(prefixes)?;
                    let p = self.parse_pattern_term(prefixes)?;
                    let o = self.parse_pattern_term(prefixes)?;
                    patterns.push(TriplePattern::new(s, p, o));
                    // '.' separator optional before '}'
                    if matches!(
                        self.peek()?,
                        Some(Token {
                            kind: TokenKind::Punct('.'),
                            ..
                        })
                    ) {
                        self.next()?;
                    }
                }
                None => {
                    return Err(ParseError::Semantic(
                        "unterminated pattern block: missing '}'".into(),
                    ))
                }
            }
        }
    }
}

/// Splits a pattern list into data patterns and user-defined-predicate
/// groups, validating group completeness.
fn classify(
    patterns: Vec<TriplePattern>,
    usage_required: bool,
) -> Result<(Vec<TriplePattern>, Vec<UdpGroup>), ParseError> {
    let kgnet_task = |t: &Term| -> Option<Result<TaskType, String>> {
        let iri = t.as_iri()?;
        let local = iri.strip_prefix(KGNET_NS)?;
        Some(TaskType::from_name(local).ok_or_else(|| local.to_string()))
    };

    // pass 1: variables typed `?X a kgnet:<Task>`
    let mut groups: Vec<UdpGroup> = Vec::new();
    for p in &patterns {
        if p.predicate.as_iri() == Some(RDF_TYPE) {
            if let (Some(var), Some(task)) = (p.subject.as_variable(), kgnet_task(&p.object)) {
                let task = task.map_err(|name| {
                    ParseError::Semantic(format!("unknown kgnet task type {name:?}"))
                })?;
                if groups.iter().any(|g| g.predicate_var == var) {
                    return Err(ParseError::Semantic(format!(
                        "variable ?{var} typed as a GML task more than once"
                    )));
                }
                groups.push(UdpGroup {
                    predicate_var: var.to_string(),
                    task_type: task,
                    subject_var: None,
                    object_var: None,
                    constraints: IndexMap::new(),
                });
            }
        }
    }

    // pass 2: constraints and usage triples
    let mut data_patterns = Vec::new();
    for p in patterns {
        // typing triple already consumed into a group
        if p.predicate.as_iri() == Some(RDF_TYPE)
            && p.subject
                .as_variable()
                .is_some_and(|v| groups.iter().any(|g| g.predicate_var == v))
        {
            continue;
        }
        // constraint triple: ?X kgnet:<Key> value
        if let (Some(var), Some(pred_iri)) = (p.subject.as_variable(), p.predicate.as_iri()) {
            if let Some(local) = pred_iri.strip_prefix(KGNET_NS) {
                if let Some(group) = groups.iter_mut().find(|g| g.predicate_var == var) {
                    let key = ConstraintKey::from_local_name(local).ok_or_else(|| {
                        ParseError::Semantic(format!(
                            "unknown kgnet constraint kgnet:{local} on ?{var}"
                        ))
                    })?;
                    group.constraints.insert(key, p.object.clone());
                    continue;
                }
            }
        }
        // usage triple: ?s ?X ?o with ?X a typed predicate variable
        if let Some(var) = p.predicate.as_variable() {
            if let Some(group) = groups.iter_mut().find(|g| g.predicate_var == var) {
                if group.subject_var.is_some() {
                    return Err(ParseError::Semantic(format!(
                        "predicate variable ?{var} used in more than one triple pattern"
                    )));
                }
                let s = p.subject.as_variable().ok_or_else(|| {
                    ParseError::Semantic(format!(
                        "subject of GML pattern with ?{var} must be a variable"
                    ))
                })?;
                let o = p.object.as_variable().ok_or_else(|| {
                    ParseError::Semantic(format!(
                        "object of GML pattern with ?{var} must be a variable"
                    ))
                })?;
                group.subject_var = Some(s.to_string());
                group.object_var = Some(o.to_string());
                continue;
            }
        }
        // anything else mentioning the kgnet namespace is malformed
        if p.terms()
            .iter()
            .any(|t| t.as_iri().is_some_and(|iri| iri.starts_with(KGNET_NS)))
        {
            return Err(ParseError::Semantic(format!(
                "kgnet term in a non-GML pattern: {p}"
            )));
        }
        data_patterns.push(p);
    }

    // completeness
    for g in &groups {
        let require = |key: ConstraintKey| -> Result<(), ParseError> {
            if g.constraints.contains_key(&key) {
                Ok(())
            } else {
                Err(ParseError::Semantic(format!(
                    "{} group ?{} lacks kgnet:{}",
                    g.task_type.as_str(),
                    g.predicate_var,
                    key.local_name()
                )))
            }
        };
        match g.task_type {
            TaskType::NodeClassifier => {
                require(ConstraintKey::TargetNode)?;
                require(ConstraintKey::NodeLabel)?;
            }
            TaskType::LinkPredictor => {
                require(ConstraintKey::SourceNode)?;
                require(ConstraintKey::DestinationNode)?;
            }
            TaskType::NodeSimilarity => {}
        }
        if let Some(k) = g.constraints.get(&ConstraintKey::TopK) {
            let ok = k
                .as_literal_lexical()
                .and_then(|s| s.parse::<i64>().ok())
                .is_some_and(|n| n > 0);
            if !ok {
                return Err(ParseError::Semantic(format!(
                    "kgnet:TopK-Links on ?{} must be a positive integer",
                    g.predicate_var
                )));
            }
        }
        if usage_required && g.subject_var.is_none() {
            return Err(ParseError::Semantic(format!(
                "predicate variable ?{} is typed but never used in a triple pattern",
                g.predicate_var
            )));
        }
        // predicted objects never join with stored triples
        if let Some(ov) = &g.object_var {
            if data_patterns
                .iter()
                .any(|p| p.variables().any(|v| v == ov))
            {
                return Err(ParseError::Semantic(format!(
                    "predicted variable ?{ov} must not occur in data patterns"
                )));
            }
        }
    }

    Ok((data_patterns, groups))
}

/// Parses a SPARQL-ML query (SELECT, train INSERT, or model DELETE).
pub fn parse(text: &str) -> Result<SparqlMlAst, ParseError> {
    let mut p = Parser::new(text);
    let mut prefixes = p.parse_prefixes()?;
    if !prefixes.contains_key("kgnet") {
        // the kgnet vocabulary is always resolvable
        prefixes.insert("kgnet".to_string(), KGNET_NS.to_string());
    }

    if p.peek_keyword("select")? {
        p.next()?;
        let mut projection = Vec::new();
        loop {
            match p.peek()? {
                Some(Token {
                    kind: TokenKind::Variable(v),
                    ..
                }) => {
                    projection.push(v.clone());
                    p.next()?;
                }
                _ => break,
            }
        }
        p.expect_keyword("where")?;
        p.expect_punct('{')?;
        let patterns = p.parse_pattern_block(&prefixes)?;
        if patterns.is_empty() {
            return Err(ParseError::Semantic("empty WHERE clause".into()));
        }
        let (data_patterns, gml_patterns) = classify(patterns, true)?;
        // every projected variable must come from somewhere
        for v in &projection {
            let in_data = data_patterns.iter().any(|pat| pat.variables().any(|x| x == v));
            let is_predicted = gml_patterns
                .iter()
                .any(|g| g.object_var.as_deref() == Some(v) || g.subject_var.as_deref() == Some(v));
            if !in_data && !is_predicted {
                return Err(ParseError::Semantic(format!(
                    "projected variable ?{v} is not bound by any pattern"
                )));
            }
        }
        Ok(SparqlMlAst {
            kind: QueryKind::Select,
            prefixes,
            projection,
            data_patterns,
            gml_patterns,
            train_payload: None,
        })
    } else if p.peek_keyword("insert")? {
        p.next()?;
        p.expect_keyword("into")?;
        match p.next()? {
            Some(Token {
                kind: TokenKind::Iri(_),
                ..
            }) => {}
            other => {
                return Err(ParseError::Semantic(format!(
                    "expected target graph IRI after INSERT INTO, found {other:?}"
                )))
            }
        }
        p.expect_punct('{')?;
        let _template = p.parse_pattern_block(&prefixes)?;
        p.expect_keyword("where")?;
        p.expect_punct('{')?;
        p.expect_keyword("select")?;
        p.expect_punct('*')?;
        p.expect_keyword("from")?;
        // `TrainGML(...)` or `kgnet.TrainGML(...)`
        if p.peek_keyword("kgnet")? {
            p.next()?;
            p.expect_punct('.')?;
        }
        p.expect_keyword("TrainGML")?;
        p.expect_punct('(')?;
        let payload = p.capture_payload()?;
        let spec = train::parse_train_json_with_prefixes(&payload, &prefixes)
            .map_err(ParseError::TrainPayload)?;
        p.expect_punct(')')?;
        p.expect_punct('}')?;
        Ok(SparqlMlAst {
            kind: QueryKind::InsertTrain,
            prefixes,
            projection: Vec::new(),
            data_patterns: Vec::new(),
            gml_patterns: Vec::new(),
            train_payload: Some(spec),
        })
    } else if p.peek_keyword("delete")? {
        p.next()?;
        p.expect_keyword("where")?;
        p.expect_punct('{')?;
        let patterns = p.parse_pattern_block(&prefixes)?;
        let (data_patterns, gml_patterns) = classify(patterns, false)?;
        if gml_patterns.is_empty() {
            return Err(ParseError::Semantic(
                "DELETE WHERE must constrain at least one GML model".into(),
            ));
        }
        if !data_patterns.is_empty() {
            return Err(ParseError::Semantic(
                "DELETE WHERE supports only model constraint patterns".into(),
            ));
        }
        Ok(SparqlMlAst {
            kind: QueryKind::DeleteModel,
            prefixes,
            projection: Vec::new(),
            data_patterns,
            gml_patterns,
            train_payload: None,
        })
    } else {
        Err(p.error_here("expected SELECT, INSERT, or DELETE"))
    }
}
