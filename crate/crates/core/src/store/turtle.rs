//! Turtle output grouped by subject.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::graph::Graph;
use super::term::{escape_literal, Iri, Literal, Term};
use crate::vocab::RDF_TYPE;

/// Serializes `graph` as Turtle using the given `(prefix, namespace)` pairs.
///
/// Subjects are sorted, predicates sorted within a subject, objects sorted
/// within a predicate, so the output is deterministic. IRIs whose local part
/// is not a safe prefixed name are written in full.
pub fn serialize_turtle(graph: &Graph, prefixes: &[(&str, &str)]) -> String {
    let mut out = String::new();
    for (prefix, ns) in prefixes {
        writeln!(out, "@prefix {prefix}: <{ns}> .").unwrap();
    }
    if !prefixes.is_empty() {
        out.push('\n');
    }

    let mut by_subject: BTreeMap<&Iri, BTreeMap<&Iri, Vec<&Term>>> = BTreeMap::new();
    for t in graph.iter() {
        by_subject
            .entry(t.subject)
            .or_default()
            .entry(t.predicate)
            .or_default()
            .push(t.object);
    }

    for (subject, predicates) in by_subject {
        out.push_str(&iri_token(subject, prefixes));
        let mut first_pred = true;
        // rdf:type first, then the rest in IRI order.
        let mut predicates: Vec<_> = predicates.into_iter().collect();
        predicates.sort_by_key(|(p, _)| p.as_str() != RDF_TYPE);
        for (predicate, mut objects) in predicates {
            objects.sort();
            out.push_str(if first_pred { " " } else { " ;\n    " });
            first_pred = false;
            if predicate.as_str() == RDF_TYPE {
                out.push('a');
            } else {
                out.push_str(&iri_token(predicate, prefixes));
            }
            for (i, object) in objects.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { " ,\n        " });
                out.push_str(&term_token(object, prefixes));
            }
        }
        out.push_str(" .\n");
    }
    out
}

fn term_token(term: &Term, prefixes: &[(&str, &str)]) -> String {
    match term {
        Term::Iri(iri) => iri_token(iri, prefixes),
        Term::Literal(lit) => literal_token(lit, prefixes),
    }
}

fn literal_token(lit: &Literal, prefixes: &[(&str, &str)]) -> String {
    let mut s = format!("\"{}\"", escape_literal(lit.lexical()));
    if let Some(lang) = lit.language() {
        s.push('@');
        s.push_str(lang);
    } else if let Some(dt) = lit.datatype() {
        s.push_str("^^");
        s.push_str(&iri_token(dt, prefixes));
    }
    s
}

fn iri_token(iri: &Iri, prefixes: &[(&str, &str)]) -> String {
    // Longest namespace wins so nested namespaces compact correctly.
    let best = prefixes
        .iter()
        .filter(|(_, ns)| iri.as_str().starts_with(ns))
        .max_by_key(|(_, ns)| ns.len());
    if let Some((prefix, ns)) = best {
        let local = &iri.as_str()[ns.len()..];
        if is_safe_local(local) {
            return format!("{prefix}:{local}");
        }
    }
    iri.to_string()
}

/// A conservative subset of PN_LOCAL: ASCII alphanumerics, `_` and `-`,
/// not starting with `-`.
fn is_safe_local(local: &str) -> bool {
    !local.is_empty()
        && !local.starts_with('-')
        && local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::term::Triple;

    #[test]
    fn groups_by_subject_and_uses_prefixes() {
        let ex = "http://example.org/";
        let iri = |s: &str| Iri::new(format!("{ex}{s}")).unwrap();
        let g: Graph = [
            Triple::new(iri("s"), Iri::new(RDF_TYPE).unwrap(), iri("C")),
            Triple::new(iri("s"), iri("p"), Literal::lang("x", "fr")),
            Triple::new(iri("s"), iri("p"), iri("o-1")),
            Triple::new(iri("t"), iri("p"), iri("odd.local")),
        ]
        .into_iter()
        .collect();
        let ttl = serialize_turtle(&g, &[("ex", ex)]);
        assert_eq!(
            ttl,
            "@prefix ex: <http://example.org/> .\n\n\
             ex:s a ex:C ;\n    ex:p ex:o-1 ,\n        \"x\"@fr .\n\
             ex:t ex:p <http://example.org/odd.local> .\n"
        );
    }

    #[test]
    fn empty_graph_has_only_prefixes() {
        assert_eq!(serialize_turtle(&Graph::new(), &[]), "");
    }
}
