//! RDF terms: IRIs, literals and triples.
//!
//! There are no blank nodes. Every intermediate node produced by the toolkit
//! gets a minted IRI, which keeps the canonical N-Triples form a plain sort.

use std::fmt;

use crate::vocab::XSD_STRING;

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    /// Builds an IRI, checking that it is non-empty and carries a scheme.
    pub fn new(value: impl Into<String>) -> Result<Self, InvalidIri> {
        let value = value.into();
        if has_scheme(&value) {
            Ok(Iri(value))
        } else {
            Err(InvalidIri(value))
        }
    }

    /// Builds an IRI from a string already known to be absolute.
    ///
    /// Used for constants and for concatenations of a checked namespace with a
    /// suffix.
    pub(crate) fn new_unchecked(value: impl Into<String>) -> Self {
        let value = value.into();
        debug_assert!(has_scheme(&value), "not an absolute IRI: {value}");
        Iri(value)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// N-Triples form, `<...>` with disallowed characters `\u`-escaped.
impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for c in self.0.chars() {
            if matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') || (c as u32) <= 0x20 {
                write!(f, "\\u{:04X}", c as u32)?;
            } else {
                write!(f, "{c}")?;
            }
        }
        f.write_str(">")
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not an absolute IRI: {0:?}")]
pub struct InvalidIri(pub String);

/// `scheme ":" ...` with an RFC 3986 scheme.
fn has_scheme(s: &str) -> bool {
    let Some(colon) = s.find(':') else {
        return false;
    };
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !s.chars().any(|c| c.is_whitespace())
}

/// A literal. Language tag and datatype are mutually exclusive; a literal
/// typed `xsd:string` is stored as a simple literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    annotation: LiteralAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum LiteralAnnotation {
    Simple,
    Lang(String),
    Typed(Iri),
}

impl Literal {
    pub fn simple(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            annotation: LiteralAnnotation::Simple,
        }
    }

    /// Language tags are stored lower-cased.
    pub fn lang(lexical: impl Into<String>, lang: impl AsRef<str>) -> Self {
        Literal {
            lexical: lexical.into(),
            annotation: LiteralAnnotation::Lang(lang.as_ref().to_ascii_lowercase()),
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        let annotation = if datatype.as_str() == XSD_STRING {
            LiteralAnnotation::Simple
        } else {
            LiteralAnnotation::Typed(datatype)
        };
        Literal {
            lexical: lexical.into(),
            annotation,
        }
    }

    /// A literal with an optional language tag.
    pub fn with_optional_lang(lexical: impl Into<String>, lang: Option<&str>) -> Self {
        match lang {
            Some(tag) => Literal::lang(lexical, tag),
            None => Literal::simple(lexical),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn language(&self) -> Option<&str> {
        match &self.annotation {
            LiteralAnnotation::Lang(l) => Some(l),
            _ => None,
        }
    }

    /// Explicit datatype, if any. Simple literals report `None`, language-tagged
    /// ones report `None` as well (their implicit type is `rdf:langString`).
    pub fn datatype(&self) -> Option<&Iri> {
        match &self.annotation {
            LiteralAnnotation::Typed(dt) => Some(dt),
            _ => None,
        }
    }

    /// True for literals that carry neither a language tag nor a datatype.
    pub fn is_simple(&self) -> bool {
        matches!(self.annotation, LiteralAnnotation::Simple)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        f.write_str(&escape_literal(&self.lexical))?;
        f.write_str("\"")?;
        match &self.annotation {
            LiteralAnnotation::Simple => Ok(()),
            LiteralAnnotation::Lang(l) => write!(f, "@{l}"),
            LiteralAnnotation::Typed(dt) => write!(f, "^^{dt}"),
        }
    }
}

/// A node or value in object position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }

    /// IRI string or literal lexical form.
    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(iri) => iri.as_str(),
            Term::Literal(lit) => lit.lexical(),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => iri.fmt(f),
            Term::Literal(lit) => lit.fmt(f),
        }
    }
}

/// A subject-predicate-object statement. The subject is always an IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

/// Renders the triple as one N-Triples line, without the trailing newline.
impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
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
            '\u{08}' => out.push_str("\\b"),
            '\u{0C}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 || c == '\u{7F}' => {
                out.push_str(&format!("\\u{:04X}", c as u32));
            }
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_requires_scheme() {
        assert!(Iri::new("http://example.org/a").is_ok());
        assert!(Iri::new("urn:x").is_ok());
        assert!(Iri::new("").is_err());
        assert!(Iri::new("no-scheme").is_err());
        assert!(Iri::new("1http://x").is_err());
        assert!(Iri::new("http://a b").is_err());
    }

    #[test]
    fn xsd_string_is_simple() {
        let dt = Iri::new(XSD_STRING).unwrap();
        assert_eq!(Literal::typed("x", dt), Literal::simple("x"));
    }

    #[test]
    fn lang_distinguishes_literals() {
        assert_ne!(Literal::lang("a", "fr"), Literal::lang("a", "en"));
        assert_ne!(Literal::lang("a", "fr"), Literal::simple("a"));
        assert_eq!(Literal::lang("a", "FR"), Literal::lang("a", "fr"));
    }

    #[test]
    fn literal_escaping() {
        let lit = Literal::simple("line\nbreak \"q\" \\ \u{1}");
        assert_eq!(lit.to_string(), r#""line\nbreak \"q\" \\ \u0001""#);
    }
}
