//! N-Triples reading and writing.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::term::{escape_literal, Term, Triple};

#[derive(Debug, Error)]
pub enum NtriplesError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn err(line: usize, reason: impl Into<String>) -> NtriplesError {
    NtriplesError::Parse {
        line,
        reason: reason.into(),
    }
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str, line: usize) -> Cursor<'a> {
        Cursor {
            chars: s.chars().collect(),
            pos: 0,
            line,
            _src: s,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<(), NtriplesError> {
        match self.next() {
            Some(got) if got == c => Ok(()),
            other => Err(err(self.line, format!("expected {c:?}, got {other:?}"))),
        }
    }

    fn take_until(&mut self, stop: char) -> Result<String, NtriplesError> {
        let mut s = String::new();
        loop {
            match self.next() {
                Some(c) if c == stop => return Ok(s),
                Some(c) => s.push(c),
                None => return Err(err(self.line, format!("unterminated token, expected {stop:?}"))),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Term, NtriplesError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => {
                self.next();
                Ok(Term::Iri(self.take_until('>')?))
            }
            Some('_') => {
                self.next();
                self.expect(':')?;
                let mut label = String::new();
                while self
                    .peek()
                    .is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '-')
                {
                    label.push(self.next().unwrap());
                }
                if label.is_empty() {
                    return Err(err(self.line, "empty blank node label"));
                }
                Ok(Term::Blank(label))
            }
            Some('"') => {
                self.next();
                let mut lexical = String::new();
                loop {
                    match self.next() {
                        Some('"') => break,
                        Some('\\') => match self.next() {
                            Some('\\') => lexical.push('\\'),
                            Some('"') => lexical.push('"'),
                            Some('n') => lexical.push('\n'),
                            Some('r') => lexical.push('\r'),
                            Some('t') => lexical.push('\t'),
                            Some('u') | Some('U') => {
                                return Err(err(self.line, "\\u escapes not supported"))
                            }
                            other => {
                                return Err(err(self.line, format!("bad escape {other:?}")))
                            }
                        },
                        Some(c) => lexical.push(c),
                        None => return Err(err(self.line, "unterminated literal")),
                    }
                }
                match self.peek() {
                    Some('^') => {
                        self.next();
                        self.expect('^')?;
                        self.expect('<')?;
                        let dt = self.take_until('>')?;
                        Ok(Term::Literal {
                            lexical,
                            datatype: Some(dt),
                            lang: None,
                        })
                    }
                    Some('@') => {
                        self.next();
                        let mut lang = String::new();
                        while self
                            .peek()
                            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '-')
                        {
                            lang.push(self.next().unwrap());
                        }
                        if lang.is_empty() {
                            return Err(err(self.line, "empty language tag"));
                        }
                        Ok(Term::Literal {
                            lexical,
                            datatype: None,
                            lang: Some(lang),
                        })
                    }
                    _ => Ok(Term::Literal {
                        lexical,
                        datatype: None,
                        lang: None,
                    }),
                }
            }
            other => Err(err(self.line, format!("unexpected character {other:?}"))),
        }
    }
}

/// Parses a single term in N-Triples syntax.
pub fn parse_term(text: &str) -> Result<Term, NtriplesError> {
    let mut cur = Cursor::new(text.trim(), 0);
    let term = cur.parse_term()?;
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(err(0, "trailing content after term"));
    }
    Ok(term)
}

/// Parses one N-Triples line. `line_no` is 1-based, for diagnostics.
pub fn parse_line(text: &str, line_no: usize) -> Result<Option<Triple>, NtriplesError> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut cur = Cursor::new(trimmed, line_no);
    let subject = cur.parse_term()?;
    let predicate = cur.parse_term()?;
    let object = cur.parse_term()?;
    cur.skip_ws();
    match cur.next() {
        Some('.') => {}
        _ => return Err(err(line_no, "missing terminating '.'")),
    }
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(err(line_no, "trailing content after '.'"));
    }
    Triple::new(subject, predicate, object).map(Some).map_err(|reason| err(line_no, reason))
}

pub fn parse(text: &str) -> Result<Vec<Triple>, NtriplesError> {
    let mut triples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(t) = parse_line(line, i + 1)? {
            triples.push(t);
        }
    }
    Ok(triples)
}

pub fn read<R: Read>(reader: R) -> Result<Vec<Triple>, NtriplesError> {
    let mut triples = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        if let Some(t) = parse_line(&line?, i + 1)? {
            triples.push(t);
        }
    }
    Ok(triples)
}

pub fn load_file(path: &Path) -> Result<Vec<Triple>, NtriplesError> {
    read(File::open(path)?)
}

fn render_term(t: &Term) -> String {
    match t {
        Term::Literal {
            lexical,
            datatype,
            lang,
        } => {
            let mut s = format!("\"{}\"", escape_literal(lexical));
            if let Some(lang) = lang {
                s.push('@');
                s.push_str(lang);
            } else if let Some(dt) = datatype {
                s.push_str("^^<");
                s.push_str(dt);
                s.push('>');
            }
            s
        }
        other => other.to_string(),
    }
}

/// One triple per line, sorted, UTF-8.
pub fn serialize(triples: &[Triple]) -> String {
    let mut sorted: Vec<&Triple> = triples.iter().collect();
    sorted.sort();
    let mut out = String::new();
    for t in sorted {
        out.push_str(&render_term(&t.subject));
        out.push(' ');
        out.push_str(&render_term(&t.predicate));
        out.push(' ');
        out.push_str(&render_term(&t.object));
        out.push_str(" .\n");
    }
    out
}

pub fn write_file(path: &Path, triples: &[Triple]) -> Result<(), NtriplesError> {
    let mut f = File::create(path)?;
    f.write_all(serialize(triples).as_bytes())?;
    Ok(())
}
