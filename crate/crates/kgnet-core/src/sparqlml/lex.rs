//! Tokenizer shared by the SPARQL-ML parser and the embedded store's
//! plain-SPARQL evaluator.

use thiserror::Error;

#[derive(Debug, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// `<http://...>`
    Iri(String),
    /// `prefix:Local` or bare `Local` (keywords are recognized later).
    Word(String),
    /// `?name`
    Variable(String),
    /// `"..."` with optional `@lang` / `^^<dt>` suffix
    Literal {
        lexical: String,
        datatype: Option<String>,
        lang: Option<String>,
    },
    /// bare integer or decimal
    Number(String),
    /// `_:label`
    Blank(String),
    Punct(char),
    /// raw brace-balanced payload captured after `TrainGML(`
    Payload(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

pub struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> LexError {
        LexError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn word_char(c: char) -> bool {
        c.is_alphanumeric() || c == '_' || c == '-' || c == ':' || c == '/' || c == '.'
    }

    /// Captures a brace-balanced `{...}` block verbatim, used for TrainGML
    /// payloads whose content is not SPARQL.
    pub fn capture_braced_payload(&mut self) -> Result<String, LexError> {
        self.skip_trivia();
        if self.peek() != Some('{') {
            return Err(self.error("expected '{' opening a payload"));
        }
        let mut depth = 0usize;
        let mut out = String::new();
        let mut in_string: Option<char> = None;
        loop {
            let Some(c) = self.bump() else {
                return Err(self.error("unterminated payload"));
            };
            if let Some(quote) = in_string {
                out.push(c);
                if c == quote {
                    in_string = None;
                }
                continue;
            }
            match c {
                '\'' | '"' => {
                    out.push(c);
                    in_string = Some(c);
                }
                '{' => {
                    depth += 1;
                    out.push(c);
                }
                '}' => {
                    depth -= 1;
                    out.push(c);
                    if depth == 0 {
                        return Ok(out);
                    }
                }
                c => out.push(c),
            }
        }
    }

    pub fn next_token(&mut self) -> Result<Option<Token>, LexError> {
        self.skip_trivia();
        let (line, column) = (self.line, self.column);
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let kind = match c {
            '<' => {
                self.bump();
                let mut iri = String::new();
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some(c) if !c.is_whitespace() => iri.push(c),
                        _ => return Err(self.error("unterminated IRI")),
                    }
                }
                TokenKind::Iri(iri)
            }
            '?' | '$' => {
                self.bump();
                let mut name = String::new();
                while self
                    .peek()
                    .is_some_and(|c| c.is_alphanumeric() || c == '_')
                {
                    name.push(self.bump().unwrap());
                }
                if name.is_empty() {
                    return Err(self.error("empty variable name"));
                }
                TokenKind::Variable(name)
            }
            '"' => {
                self.bump();
                let mut lexical = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('\\') => lexical.push('\\'),
                            Some('"') => lexical.push('"'),
                            Some('n') => lexical.push('\n'),
                            Some('r') => lexical.push('\r'),
                            Some('t') => lexical.push('\t'),
                            other => return Err(self.error(format!("bad escape {other:?}"))),
                        },
                        Some(c) => lexical.push(c),
                        None => return Err(self.error("unterminated string literal")),
                    }
                }
                let mut datatype = None;
                let mut lang = None;
                if self.peek() == Some('^') && self.peek2() == Some('^') {
                    self.bump();
                    self.bump();
                    if self.peek() != Some('<') {
                        return Err(self.error("expected <datatype IRI> after ^^"));
                    }
                    self.bump();
                    let mut dt = String::new();
                    loop {
                        match self.bump() {
                            Some('>') => break,
                            Some(c) => dt.push(c),
                            None => return Err(self.error("unterminated datatype IRI")),
                        }
                    }
                    datatype = Some(dt);
                } else if self.peek() == Some('@') {
                    self.bump();
                    let mut tag = String::new();
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '-')
                    {
                        tag.push(self.bump().unwrap());
                    }
                    lang = Some(tag);
                }
                TokenKind::Literal {
                    lexical,
                    datatype,
                    lang,
                }
            }
            '_' if self.peek2() == Some(':') => {
                self.bump();
                self.bump();
                let mut label = String::new();
                while self
                    .peek()
                    .is_some_and(|c| c.is_alphanumeric() || c == '_')
                {
                    label.push(self.bump().unwrap());
                }
                TokenKind::Blank(label)
            }
            c if c.is_ascii_digit() => {
                let mut num = String::new();
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_digit() || c == '.')
                {
                    // a trailing '.' terminates the triple, not the number
                    if self.peek() == Some('.')
                        && !self.peek2().is_some_and(|c| c.is_ascii_digit())
                    {
                        break;
                    }
                    num.push(self.bump().unwrap());
                }
                TokenKind::Number(num)
            }
            c if c.is_alphabetic() => {
                let mut word = String::new();
                while self.peek().is_some_and(Self::word_char) {
                    // '.' ends a word unless followed by a word character
                    // (IRIs in prefixed form never contain bare dots here)
                    if self.peek() == Some('.') {
                        break;
                    }
                    word.push(self.bump().unwrap());
                }
                TokenKind::Word(word)
            }
            '{' | '}' | '(' | ')' | '.' | ';' | ',' | '*' => {
                self.bump();
                TokenKind::Punct(c)
            }
            other => return Err(self.error(format!("unexpected character {other:?}"))),
        };
        Ok(Some(Token { kind, line, column }))
    }
}
