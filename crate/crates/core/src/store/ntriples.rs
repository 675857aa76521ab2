//! N-Triples reading and canonical writing.
//!
//! The canonical form is one triple per line, lines sorted by byte order,
//! LF line endings. Blank nodes are rejected on input.

use super::graph::Graph;
use super::term::{Iri, Literal, Term, Triple};
use super::SyntaxError;

/// Canonical N-Triples: sorted lines, each terminated by `\n`.
pub fn serialize_ntriples(graph: &Graph) -> String {
    let mut lines: Vec<String> = graph.iter().map(|t| t.to_string()).collect();
    lines.sort_unstable();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses an N-Triples document. Comment lines (`#`) and blank lines are
/// skipped; positions in errors are 1-based line and character columns.
pub fn parse_ntriples(text: &str) -> Result<Graph, SyntaxError> {
    let mut graph = Graph::new();
    for (idx, line) in text.lines().enumerate() {
        if let Some(triple) = parse_line(line, idx + 1)? {
            graph.insert(triple);
        }
    }
    Ok(graph)
}

/// Parses a single line; `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>, SyntaxError> {
    let mut cur = Cursor::new(line, line_no);
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = match cur.peek() {
        Some('<') => cur.iri()?,
        Some('_') => return Err(cur.error("blank nodes are not supported")),
        Some('"') => return Err(cur.error("literal in subject position")),
        _ => return Err(cur.error("expected IRI as subject")),
    };
    cur.skip_ws();
    let predicate = match cur.peek() {
        Some('<') => cur.iri()?,
        _ => return Err(cur.error("expected IRI as predicate")),
    };
    cur.skip_ws();
    let object = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('"') => Term::Literal(cur.literal()?),
        Some('_') => return Err(cur.error("blank nodes are not supported")),
        _ => return Err(cur.error("expected IRI or literal as object")),
    };
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err(cur.error("expected '.'"));
    }
    cur.bump();
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err(cur.error("unexpected content after '.'"));
    }
    Ok(Some(Triple::new(subject, predicate, object)))
}

/// Character cursor shared by the N-Triples, Turtle-free query and slot
/// parsers. Tracks a 1-based line and column.
pub(crate) struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: std::marker::PhantomData<&'a str>,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str, line: usize) -> Self {
        Cursor {
            chars: text.chars().collect(),
            pos: 0,
            line,
            col: 1,
            _src: std::marker::PhantomData,
        }
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    pub(crate) fn position(&self) -> (usize, usize) {
        (self.line, self.col)
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    pub(crate) fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n')) {
            self.bump();
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    pub(crate) fn error_at(&self, (line, col): (usize, usize), message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line,
            col,
            message: message.into(),
        }
    }

    /// `<...>` with `\u` / `\U` escapes; the result must be absolute.
    pub(crate) fn iri(&mut self) -> Result<Iri, SyntaxError> {
        let start = self.position();
        if self.bump() != Some('<') {
            return Err(self.error_at(start, "expected '<'"));
        }
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated IRI")),
                Some('>') => break,
                Some('\\') => match self.bump() {
                    Some('u') => value.push(self.hex_escape(4)?),
                    Some('U') => value.push(self.hex_escape(8)?),
                    _ => return Err(self.error("invalid escape in IRI")),
                },
                Some(c) if matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') || (c as u32) <= 0x20 => {
                    return Err(self.error(format!("character {c:?} not allowed in IRI")));
                }
                Some(c) => value.push(c),
            }
        }
        Iri::new(value).map_err(|e| self.error_at(start, e.to_string()))
    }

    /// A quoted string with escapes, returning its unescaped content.
    pub(crate) fn quoted(&mut self) -> Result<String, SyntaxError> {
        if self.bump() != Some('"') {
            return Err(self.error("expected '\"'"));
        }
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated string")),
                Some('"') => return Ok(value),
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{08}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{0C}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return Err(self.error("invalid escape in string")),
                    };
                    value.push(c);
                }
                Some('\n' | '\r') => return Err(self.error("raw line break in string")),
                Some(c) => value.push(c),
            }
        }
    }

    /// `"..."` optionally followed by `@lang` or `^^<datatype>`.
    pub(crate) fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let lexical = self.quoted()?;
        match self.peek() {
            Some('@') => {
                self.bump();
                let tag = self.lang_tag()?;
                Ok(Literal::lang(lexical, tag))
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err(self.error("expected '^^'"));
                }
                let dt = self.iri()?;
                Ok(Literal::typed(lexical, dt))
            }
            _ => Ok(Literal::simple(lexical)),
        }
    }

    fn lang_tag(&mut self) -> Result<String, SyntaxError> {
        let mut tag = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '-' {
                tag.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if is_lang_tag(&tag) {
            Ok(tag)
        } else {
            Err(self.error(format!("invalid language tag {tag:?}")))
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, SyntaxError> {
        let mut code = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.error("invalid hex escape"))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| self.error("escape is not a Unicode scalar value"))
    }
}

/// `[a-zA-Z]+ ('-' [a-zA-Z0-9]+)*`
pub(crate) fn is_lang_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let first_ok = parts
        .next()
        .is_some_and(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()));
    first_ok && parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}
