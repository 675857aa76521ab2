mod common;

use std::collections::{BTreeSet, HashMap};

use heritage_forge::ontology::{load_ontology, validate_graph, DefectKind, Ontology, PropertyRange, ViolationKind};
use heritage_forge::store::{Graph, Iri, Literal, Term, Triple};
use heritage_forge::vocab::RDF_TYPE;
use proptest::prelude::*;

use common::{ex, fixture};

fn ont() -> &'static Ontology {
    Ontology::builtin()
}

fn class_ids() -> Vec<String> {
    ont().classes().map(|c| c.id.clone()).collect()
}

fn property_ids() -> Vec<String> {
    ont().properties().map(|p| p.id.clone()).collect()
}

/// Ancestors by walking parent lists, independent of the library's closure.
fn ancestors(id: &str) -> BTreeSet<String> {
    let parents: HashMap<&str, &Vec<String>> = ont().classes().map(|c| (c.id.as_str(), &c.parents)).collect();
    let mut seen = BTreeSet::new();
    let mut stack = vec![id.to_string()];
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            stack.extend(parents[c.as_str()].iter().cloned());
        }
    }
    seen
}

#[test]
fn subclass_relation_is_a_partial_order_matching_parent_walks() {
    let ids = class_ids();
    for a in &ids {
        let up = ancestors(a);
        assert!(ont().is_subclass_of(a, a).unwrap(), "{a} not reflexive");
        for b in &ids {
            let ab = ont().is_subclass_of(a, b).unwrap();
            assert_eq!(ab, up.contains(b), "{a} <= {b}");
            if a != b && ab {
                assert!(
                    !ont().is_subclass_of(b, a).unwrap(),
                    "{a} and {b} are mutual subclasses"
                );
            }
        }
    }
    assert!(ont().is_subclass_of("E99_not_a_class", "E1").is_err());
}

/// Nodes n0..n5, each typed with a random class, linked by random properties.
fn typed_graph() -> impl Strategy<Value = Vec<Triple>> {
    let classes = class_ids();
    let props = property_ids();
    let typing = (0..6usize, prop::sample::select(classes));
    let link = (
        0..6usize,
        prop::sample::select(props),
        prop_oneof![(0..6usize).prop_map(Ok), "[a-z]{1,3}".prop_map(Err)],
    );
    (prop::collection::vec(typing, 0..10), prop::collection::vec(link, 0..12)).prop_map(|(types, links)| {
        let node = |i: usize| ex(&format!("n{i}"));
        let mut out: Vec<Triple> = types
            .into_iter()
            .map(|(i, c)| Triple::new(node(i), Iri::new(RDF_TYPE).unwrap(), ont().class_iri(&c).clone()))
            .collect();
        out.extend(links.into_iter().map(|(i, p, o)| {
            let object: Term = match o {
                Ok(j) => node(j).into(),
                Err(s) => Literal::simple(s).into(),
            };
            Triple::new(node(i), ont().property_iri(&p).clone(), object)
        }));
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn report_ignores_insertion_order(triples in typed_graph().prop_shuffle(), seed in any::<u64>()) {
        let forward: Graph = triples.iter().cloned().collect();
        let mut shuffled = triples.clone();
        let n = shuffled.len().max(1);
        shuffled.rotate_left((seed as usize) % n);
        shuffled.reverse();
        let backward: Graph = shuffled.into_iter().collect();
        prop_assert_eq!(validate_graph(ont(), &forward), validate_graph(ont(), &backward));
    }

    /// Replacing a node's class by a direct subclass never adds a domain or
    /// range error for that node.
    #[test]
    fn specializing_a_type_adds_no_errors(triples in typed_graph(), pick in any::<prop::sample::Index>()) {
        let g: Graph = triples.iter().cloned().collect();
        let typings: Vec<&Triple> = triples.iter().filter(|t| t.predicate.as_str() == RDF_TYPE).collect();
        prop_assume!(!typings.is_empty());
        let t = typings[pick.index(typings.len())];
        let class = ont().class_by_iri(t.object.as_iri().unwrap()).unwrap();
        let children: Vec<_> = ont().classes().filter(|c| c.parents.contains(&class.id)).collect();
        prop_assume!(!children.is_empty());
        let child = children[pick.index(children.len())];

        let mut specialized = g.clone();
        specialized.remove(t);
        specialized.insert(Triple::new(t.subject.clone(), t.predicate.clone(), child.iri.clone()));
        let errors = |g: &Graph| -> BTreeSet<(String, String, ViolationKind)> {
            validate_graph(ont(), g)
                .violations
                .into_iter()
                .filter(|v| matches!(v.kind, ViolationKind::DomainMismatch | ViolationKind::RangeMismatch))
                .filter(|v| v.triple.predicate.as_str() != RDF_TYPE)
                .map(|v| (v.triple.subject.to_string(), v.triple.predicate.to_string(), v.kind))
                .collect()
        };
        let before = errors(&g);
        let after = errors(&specialized);
        prop_assert!(after.is_subset(&before), "new errors: {:?}", after.difference(&before).collect::<Vec<_>>());
    }

    /// Every reported domain or range error is checked against the ontology
    /// directly.
    #[test]
    fn domain_errors_agree_with_parent_walks(triples in typed_graph()) {
        let g: Graph = triples.iter().cloned().collect();
        let report = validate_graph(ont(), &g);
        for t in triples.iter().filter(|t| t.predicate.as_str() != RDF_TYPE) {
            let prop = ont().property_by_iri(&t.predicate).unwrap();
            let types: Vec<String> = g.types_of(&t.subject).filter_map(|c| ont().class_by_iri(c)).map(|c| c.id.clone()).collect();
            let ok = types.is_empty() || types.iter().any(|c| ancestors(c).contains(&prop.domain));
            let flagged = report.of_kind(ViolationKind::DomainMismatch).any(|v| &v.triple == t);
            prop_assert_eq!(flagged, !ok, "{} types {:?}", t, types);

            let range_ok = match (&prop.range, &t.object) {
                (PropertyRange::Literal, Term::Literal(_)) => true,
                (PropertyRange::Literal, Term::Iri(_)) => false,
                (PropertyRange::Class(c), Term::Literal(_)) => ont().is_literal_valued(c),
                (PropertyRange::Class(c), Term::Iri(o)) => {
                    let ts: Vec<String> = g.types_of(o).filter_map(|x| ont().class_by_iri(x)).map(|x| x.id.clone()).collect();
                    ts.is_empty() || ts.iter().any(|x| ancestors(x).contains(c))
                }
            };
            let range_flagged = report.of_kind(ViolationKind::RangeMismatch).any(|v| &v.triple == t);
            prop_assert_eq!(range_flagged, !range_ok, "{} range {:?}", t, prop.range);
        }
    }
}

#[test]
fn unknown_property() {
    let g: Graph = [Triple::new(ex("a"), ex("madeUp"), ex("b"))].into_iter().collect();
    let report = validate_graph(ont(), &g);
    assert_eq!(report.of_kind(ViolationKind::UnknownProperty).count(), 1);
    assert!(report.has_errors());
}

#[test]
fn golden_graph_is_valid() {
    let g = heritage_forge::store::parse_ntriples(&fixture("versailles.golden.nt")).unwrap();
    let report = validate_graph(ont(), &g);
    assert_eq!(report.error_count(), 0, "{:?}", report.violations);
    assert_eq!(report.warning_count(), 0, "{:?}", report.violations);
}

#[test]
fn cyclic_ontology_is_rejected() {
    let doc = r#"{"classes": [
        {"id": "A", "iri": "http://example.org/A", "label": "A", "parents": ["B"]},
        {"id": "B", "iri": "http://example.org/B", "label": "B", "parents": ["A"]}
    ], "properties": []}"#;
    let err = load_ontology(doc).unwrap_err();
    assert!(
        err.defects().iter().any(|d| d.kind == DefectKind::CycleDetected),
        "{err}"
    );
}

#[test]
fn untyped_object_is_a_warning_only() {
    let p2 = ont().property_iri("P2").clone();
    let g: Graph = [
        Triple::new(ex("a"), Iri::new(RDF_TYPE).unwrap(), ont().class_iri("E22").clone()),
        Triple::new(ex("a"), p2, ex("b")),
    ]
    .into_iter()
    .collect();
    let report = validate_graph(ont(), &g);
    assert_eq!(
        report.of_kind(ViolationKind::UntypedNodeWarning).count(),
        1,
        "{:?}",
        report.violations
    );
    assert!(!report.has_errors());
}
