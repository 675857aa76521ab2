//! In-memory triple store: terms, graphs, conjunctive queries and
//! N-Triples / Turtle serialization.

mod graph;
mod ntriples;
mod query;
mod term;
mod turtle;

use std::fmt;

pub use graph::{Graph, TripleRef};
pub(crate) use ntriples::is_lang_tag;
pub use ntriples::{parse_line as parse_ntriples_line, parse_ntriples, serialize_ntriples};
pub use query::{
    compare_rows, compare_terms, execute, format_query, parse_query, BindingTable, CompareOp, Filter, PatternTerm,
    Query, QueryError, TriplePattern,
};
pub use term::{InvalidIri, Iri, Literal, Term, Triple};
pub use turtle::serialize_turtle;

/// A parse error with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}
