//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use heritage_forge::store::{CompareOp, Filter, Graph, Iri, Literal, PatternTerm, Query, Term, Triple, TriplePattern};
use proptest::prelude::*;

pub const BASE: &str = "http://data.silknow.org/";

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn ex(local: &str) -> Iri {
    Iri::new(format!("http://example.org/{local}")).unwrap()
}

// ---- random graphs over a small vocabulary, so joins actually hit ----

pub fn small_iri() -> impl Strategy<Value = Iri> {
    prop::sample::select(vec!["a", "b", "c", "d", "e"]).prop_map(ex)
}

pub fn small_predicate() -> impl Strategy<Value = Iri> {
    prop::sample::select(vec!["p", "q", "r"]).prop_map(ex)
}

pub fn small_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        prop::sample::select(vec!["1", "2", "10", "x", "y", "-3.5"]).prop_map(Literal::simple),
        Just(Literal::lang("x", "en")),
        Just(Literal::lang("x", "fr")),
        Just(Literal::typed(
            "2",
            Iri::new("http://www.w3.org/2001/XMLSchema#integer").unwrap()
        )),
    ]
}

pub fn small_term() -> impl Strategy<Value = Term> {
    prop_oneof![3 => small_iri().prop_map(Term::Iri), 2 => small_literal().prop_map(Term::Literal)]
}

pub fn small_triple() -> impl Strategy<Value = Triple> {
    (small_iri(), small_predicate(), small_term()).prop_map(|(s, p, o)| Triple::new(s, p, o))
}

pub fn small_graph(max: usize) -> impl Strategy<Value = Vec<Triple>> {
    prop::collection::vec(small_triple(), 0..=max)
}

// ---- arbitrary graphs for serialization round trips ----

fn wild_string() -> impl Strategy<Value = String> {
    prop_oneof![
        "[ -~]{0,12}",
        "\\PC{0,12}",
        prop::collection::vec(
            prop::sample::select(vec![
                '"', '\\', '\n', '\r', '\t', 'é', '\u{7f}', '\u{1f}', '😀', 'a', ' '
            ]),
            0..10
        )
        .prop_map(|cs| cs.into_iter().collect()),
    ]
}

pub fn wild_iri() -> impl Strategy<Value = Iri> {
    prop_oneof![
        "([a-z0-9._~-]|%[0-9A-F]{2}){0,10}".prop_map(|s| Iri::new(format!("http://example.org/{s}")).unwrap()),
        "[a-zA-Z0-9é😀/?=&-]{0,10}(#[a-z0-9é]{0,4})?".prop_map(|s| Iri::new(format!("urn:x:{s}")).unwrap()),
    ]
}

pub fn wild_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        wild_string().prop_map(Literal::simple),
        (
            wild_string(),
            prop::sample::select(vec!["en", "fr", "EN-GB", "fr-CA", "es", "it", "zh-Hant", "de-CH-1901"])
        )
            .prop_map(|(s, l)| Literal::lang(s, l)),
        (wild_string(), wild_iri()).prop_map(|(s, dt)| Literal::typed(s, dt)),
    ]
}

pub fn wild_triple() -> impl Strategy<Value = Triple> {
    (
        wild_iri(),
        wild_iri(),
        prop_oneof![wild_iri().prop_map(Term::Iri), wild_literal().prop_map(Term::Literal)],
    )
        .prop_map(|(s, p, o)| Triple::new(s, p, o))
}

// ---- random conjunctive queries ----

const VARS: [&str; 4] = ["a", "b", "c", "d"];

fn pattern_term(position: usize) -> BoxedStrategy<PatternTerm> {
    let var = prop::sample::select(VARS.to_vec()).prop_map(|v| PatternTerm::Var(v.to_string()));
    let constant: BoxedStrategy<Term> = match position {
        0 => small_iri().prop_map(Term::Iri).boxed(),
        1 => small_predicate().prop_map(Term::Iri).boxed(),
        _ => small_term().boxed(),
    };
    prop_oneof![3 => var, 1 => constant.prop_map(PatternTerm::Const)].boxed()
}

fn pattern() -> impl Strategy<Value = TriplePattern> {
    (pattern_term(0), pattern_term(1), pattern_term(2)).prop_map(|(subject, predicate, object)| TriplePattern {
        subject,
        predicate,
        object,
    })
}

fn op() -> impl Strategy<Value = CompareOp> {
    prop::sample::select(vec![CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Gt])
}

fn pattern_vars(patterns: &[TriplePattern]) -> Vec<String> {
    let mut vars = Vec::new();
    for p in patterns {
        for t in [&p.subject, &p.predicate, &p.object] {
            if let PatternTerm::Var(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    vars
}

/// Queries with 1 to `max_patterns` patterns, up to two filters over the
/// pattern variables, and a non-empty selection.
pub fn query(max_patterns: usize, with_filters: bool) -> impl Strategy<Value = Query> {
    prop::collection::vec(pattern(), 1..=max_patterns)
        .prop_filter("needs a variable", |ps| !pattern_vars(ps).is_empty())
        .prop_flat_map(move |patterns| {
            let vars = pattern_vars(&patterns);
            let n = vars.len();
            let select = prop::sample::subsequence(vars.clone(), 1..=n).prop_shuffle();
            let operand = prop_oneof![
                prop::sample::select(vars.clone()).prop_map(PatternTerm::Var),
                small_term().prop_map(PatternTerm::Const),
            ];
            let filter = (prop::sample::select(vars.clone()), op(), operand).prop_map(|(v, op, right)| Filter {
                left: PatternTerm::Var(v),
                op,
                right,
            });
            let filters = prop::collection::vec(filter, 0..=if with_filters { 2 } else { 0 });
            (Just(patterns), select, filters)
        })
        .prop_map(|(patterns, select, filters)| Query {
            prefixes: BTreeMap::new(),
            select,
            patterns,
            filters,
        })
}

// ---- brute-force query oracle ----

fn number(lit: &Literal) -> Option<f64> {
    let x: f64 = lit.lexical().trim().parse().ok()?;
    x.is_finite().then_some(x)
}

fn filter_holds(left: &Term, op: CompareOp, right: &Term) -> bool {
    match op {
        CompareOp::Eq => left == right,
        CompareOp::Ne => left != right,
        CompareOp::Lt | CompareOp::Gt => match (left, right) {
            (Term::Literal(a), Term::Literal(b)) => {
                let ord = match (number(a), number(b)) {
                    (Some(x), Some(y)) => x.partial_cmp(&y),
                    _ => Some(a.lexical().cmp(b.lexical())),
                };
                ord == Some(if op == CompareOp::Lt {
                    Ordering::Less
                } else {
                    Ordering::Greater
                })
            }
            _ => false,
        },
    }
}

/// Enumerates every assignment of graph terms to the query variables
/// (|terms|^|vars|) and keeps those under which all patterns are in the
/// graph and all filters hold.
pub fn brute_force(triples: &[Triple], q: &Query) -> Vec<Vec<Term>> {
    let mut universe: BTreeSet<Term> = BTreeSet::new();
    for t in triples {
        universe.extend([
            Term::Iri(t.subject.clone()),
            Term::Iri(t.predicate.clone()),
            t.object.clone(),
        ]);
    }
    let universe: Vec<Term> = universe.into_iter().collect();
    if universe.is_empty() {
        return Vec::new();
    }
    let id = |t: &Term| universe.iter().position(|u| u == t);
    let set: HashSet<[usize; 3]> = triples
        .iter()
        .map(|t| {
            [
                id(&Term::Iri(t.subject.clone())).unwrap(),
                id(&Term::Iri(t.predicate.clone())).unwrap(),
                id(&t.object).unwrap(),
            ]
        })
        .collect();
    let vars = pattern_vars(&q.patterns);
    let slot = |t: &PatternTerm| -> Option<Result<usize, usize>> {
        match t {
            PatternTerm::Var(v) => Some(Ok(vars.iter().position(|x| x == v).unwrap())),
            // A constant outside the graph can never match.
            PatternTerm::Const(c) => id(c).map(Err),
        }
    };
    let mut patterns = Vec::new();
    for p in &q.patterns {
        match (slot(&p.subject), slot(&p.predicate), slot(&p.object)) {
            (Some(s), Some(pr), Some(o)) => patterns.push([s, pr, o]),
            _ => return Vec::new(),
        }
    }
    let operand = |t: &PatternTerm| match t {
        PatternTerm::Var(v) => Ok(vars.iter().position(|x| x == v).unwrap()),
        PatternTerm::Const(c) => Err(c.clone()),
    };
    let filters: Vec<_> = q
        .filters
        .iter()
        .map(|f| (operand(&f.left), f.op, operand(&f.right)))
        .collect();
    let select: Vec<usize> = q
        .select
        .iter()
        .map(|v| vars.iter().position(|x| x == v).unwrap())
        .collect();

    let n = universe.len();
    let total = n.pow(vars.len() as u32);
    let mut env = vec![0usize; vars.len()];
    let mut rows: BTreeSet<Vec<Term>> = BTreeSet::new();
    for mut code in 0..total {
        for slot in env.iter_mut() {
            *slot = code % n;
            code /= n;
        }
        let resolve = |s: &Result<usize, usize>| match s {
            Ok(v) => env[*v],
            Err(c) => *c,
        };
        if !patterns
            .iter()
            .all(|[s, p, o]| set.contains(&[resolve(s), resolve(p), resolve(o)]))
        {
            continue;
        }
        let term = |x: &Result<usize, Term>| match x {
            Ok(v) => universe[env[*v]].clone(),
            Err(c) => c.clone(),
        };
        if !filters.iter().all(|(l, op, r)| filter_holds(&term(l), *op, &term(r))) {
            continue;
        }
        rows.insert(select.iter().map(|v| universe[env[*v]].clone()).collect());
    }
    let mut rows: Vec<Vec<Term>> = rows.into_iter().collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                x.lexical()
                    .cmp(y.lexical())
                    .then_with(|| x.to_string().cmp(&y.to_string()))
            })
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    rows
}

pub fn graph_of(triples: &[Triple]) -> Graph {
    triples.iter().cloned().collect()
}
