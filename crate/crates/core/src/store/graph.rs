use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::RangeInclusive;

use super::term::{Iri, Term, Triple};
use crate::vocab::RDF_TYPE;

type Key = [u32; 3];

/// A deduplicating set of triples with SPO, POS and OSP indexes.
///
/// Terms are interned; index entries are triples of term ids. Mutation takes
/// `&mut self`, so the borrow checker gives the single-writer / many-readers
/// discipline for free, and a `Graph` can be sent or shared between threads.
#[derive(Clone, Default)]
pub struct Graph {
    name: Option<Iri>,
    terms: Vec<Term>,
    ids: HashMap<Term, u32>,
    spo: BTreeSet<Key>,
    pos: BTreeSet<Key>,
    osp: BTreeSet<Key>,
}

/// A borrowed view of a triple stored in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleRef<'a> {
    pub subject: &'a Iri,
    pub predicate: &'a Iri,
    pub object: &'a Term,
}

impl TripleRef<'_> {
    pub fn to_owned(&self) -> Triple {
        Triple::new(self.subject.clone(), self.predicate.clone(), self.object.clone())
    }
}

impl fmt::Display for TripleRef<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn named(name: Iri) -> Self {
        Graph {
            name: Some(name),
            ..Self::default()
        }
    }

    pub fn name(&self) -> Option<&Iri> {
        self.name.as_ref()
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    /// Adds a triple. Returns `false` if it was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        let s = self.intern(Term::Iri(triple.subject));
        let p = self.intern(Term::Iri(triple.predicate));
        let o = self.intern(triple.object);
        if !self.spo.insert([s, p, o]) {
            return false;
        }
        self.pos.insert([p, o, s]);
        self.osp.insert([o, s, p]);
        true
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        let Some(key) = self.key_of(triple) else {
            return false;
        };
        if !self.spo.remove(&key) {
            return false;
        }
        let [s, p, o] = key;
        self.pos.remove(&[p, o, s]);
        self.osp.remove(&[o, s, p]);
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.key_of(triple).is_some_and(|k| self.spo.contains(&k))
    }

    /// Inserts every triple of `other`, returning how many were new.
    pub fn extend_from(&mut self, other: &Graph) -> usize {
        other.iter().filter(|t| self.insert(t.to_owned())).count()
    }

    /// Triples in index order (not the canonical serialization order).
    pub fn iter(&self) -> impl Iterator<Item = TripleRef<'_>> + '_ {
        self.spo.iter().map(move |k| self.resolve(*k))
    }

    /// All triples matching the given constants; `None` is a wildcard.
    pub fn matching<'a>(
        &'a self,
        subject: Option<&Iri>,
        predicate: Option<&Iri>,
        object: Option<&Term>,
    ) -> Box<dyn Iterator<Item = TripleRef<'a>> + 'a> {
        let lookup = |t: Option<Term>| -> Result<Option<u32>, ()> {
            match t {
                None => Ok(None),
                Some(t) => self.ids.get(&t).copied().map(Some).ok_or(()),
            }
        };
        let ids = (
            lookup(subject.cloned().map(Term::Iri)),
            lookup(predicate.cloned().map(Term::Iri)),
            lookup(object.cloned()),
        );
        match ids {
            (Ok(s), Ok(p), Ok(o)) => Box::new(self.match_ids(s, p, o).map(move |k| self.resolve(k))),
            _ => Box::new(std::iter::empty()),
        }
    }

    /// Objects of `(subject, predicate, ?)`.
    pub fn objects<'a>(&'a self, subject: &Iri, predicate: &Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.matching(Some(subject), Some(predicate), None).map(|t| t.object)
    }

    /// The `rdf:type` objects of a node that are IRIs.
    pub fn types_of<'a>(&'a self, node: &Iri) -> impl Iterator<Item = &'a Iri> + 'a {
        let rdf_type = Iri::new_unchecked(RDF_TYPE);
        self.matching(Some(node), Some(&rdf_type), None)
            .filter_map(|t| t.object.as_iri())
            .collect::<Vec<_>>()
            .into_iter()
    }

    /// Distinct subjects, in term-id order.
    pub fn subjects(&self) -> impl Iterator<Item = &Iri> + '_ {
        let mut last = None;
        self.spo.iter().filter_map(move |k| {
            if last == Some(k[0]) {
                None
            } else {
                last = Some(k[0]);
                self.terms[k[0] as usize].as_iri()
            }
        })
    }

    /// Canonically sorted owned triples.
    pub fn to_sorted_vec(&self) -> Vec<Triple> {
        let mut v: Vec<Triple> = self.iter().map(|t| t.to_owned()).collect();
        v.sort();
        v
    }

    // -- id-level access used by the query engine --

    pub(crate) fn term_id(&self, term: &Term) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub(crate) fn term(&self, id: u32) -> &Term {
        &self.terms[id as usize]
    }

    /// Matching keys in `[s, p, o]` order.
    pub(crate) fn match_ids(
        &self,
        s: Option<u32>,
        p: Option<u32>,
        o: Option<u32>,
    ) -> Box<dyn Iterator<Item = Key> + '_> {
        const MAX: u32 = u32::MAX;
        fn range(a: u32, b: Option<u32>) -> RangeInclusive<Key> {
            match b {
                Some(b) => [a, b, 0]..=[a, b, MAX],
                None => [a, 0, 0]..=[a, MAX, MAX],
            }
        }
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => Box::new(self.spo.get(&[s, p, o]).into_iter().copied()),
            (Some(s), p, None) => Box::new(self.spo.range(range(s, p)).copied()),
            (Some(s), None, Some(o)) => Box::new(self.osp.range(range(o, Some(s))).map(|&[o, s, p]| [s, p, o])),
            (None, Some(p), o) => Box::new(self.pos.range(range(p, o)).map(|&[p, o, s]| [s, p, o])),
            (None, None, Some(o)) => Box::new(self.osp.range(range(o, None)).map(|&[o, s, p]| [s, p, o])),
            (None, None, None) => Box::new(self.spo.iter().copied()),
        }
    }

    fn intern(&mut self, term: Term) -> u32 {
        if let Some(&id) = self.ids.get(&term) {
            return id;
        }
        let id = u32::try_from(self.terms.len()).expect("more than u32::MAX terms");
        self.terms.push(term.clone());
        self.ids.insert(term, id);
        id
    }

    fn key_of(&self, triple: &Triple) -> Option<Key> {
        Some([
            self.term_id(&Term::Iri(triple.subject.clone()))?,
            self.term_id(&Term::Iri(triple.predicate.clone()))?,
            self.term_id(&triple.object)?,
        ])
    }

    fn resolve(&self, [s, p, o]: Key) -> TripleRef<'_> {
        TripleRef {
            subject: self.terms[s as usize].as_iri().expect("subject is an IRI"),
            predicate: self.terms[p as usize].as_iri().expect("predicate is an IRI"),
            object: &self.terms[o as usize],
        }
    }
}

/// Set equality on triples. The graph name is not compared.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|t| other.contains(&t.to_owned()))
    }
}

impl Eq for Graph {}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("name", &self.name)
            .field("triples", &self.to_sorted_vec())
            .finish()
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        g.extend(iter);
        g
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        for t in iter {
            self.insert(t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::term::Literal;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://example.org/{s}")).unwrap()
    }

    #[test]
    fn insert_is_set_semantics() {
        let mut g = Graph::new();
        let t = Triple::new(iri("s"), iri("p"), iri("o"));
        assert!(g.insert(t.clone()));
        assert!(!g.insert(t));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn lang_tag_is_part_of_identity() {
        let mut g = Graph::new();
        assert!(g.insert(Triple::new(iri("s"), iri("p"), Literal::lang("x", "fr"))));
        assert!(g.insert(Triple::new(iri("s"), iri("p"), Literal::lang("x", "en"))));
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn remove_updates_every_index() {
        let mut g = Graph::new();
        let t = Triple::new(iri("s"), iri("p"), iri("o"));
        g.insert(t.clone());
        assert!(g.remove(&t));
        assert!(!g.remove(&t));
        assert!(g.is_empty());
        assert_eq!(g.matching(None, Some(&iri("p")), None).count(), 0);
        assert_eq!(g.matching(None, None, Some(&Term::Iri(iri("o")))).count(), 0);
    }

    #[test]
    fn matching_uses_all_access_paths() {
        let mut g = Graph::new();
        for (s, p, o) in [("a", "p", "b"), ("a", "q", "c"), ("b", "p", "c"), ("c", "q", "a")] {
            g.insert(Triple::new(iri(s), iri(p), iri(o)));
        }
        let c = Term::Iri(iri("c"));
        let count = |s: Option<&Iri>, p: Option<&Iri>, o: Option<&Term>| g.matching(s, p, o).count();
        assert_eq!(count(None, None, None), 4);
        assert_eq!(count(Some(&iri("a")), None, None), 2);
        assert_eq!(count(Some(&iri("a")), Some(&iri("q")), None), 1);
        assert_eq!(count(Some(&iri("b")), None, Some(&c)), 1);
        assert_eq!(count(None, Some(&iri("p")), None), 2);
        assert_eq!(count(None, Some(&iri("p")), Some(&c)), 1);
        assert_eq!(count(None, None, Some(&c)), 2);
        assert_eq!(count(Some(&iri("a")), Some(&iri("q")), Some(&c)), 1);
        assert_eq!(count(Some(&iri("zzz")), None, None), 0);
    }

    #[test]
    fn equality_ignores_insertion_order() {
        let t1 = Triple::new(iri("a"), iri("p"), iri("b"));
        let t2 = Triple::new(iri("b"), iri("p"), Literal::simple("x"));
        let g1: Graph = [t1.clone(), t2.clone()].into_iter().collect();
        let g2: Graph = [t2, t1].into_iter().collect();
        assert_eq!(g1, g2);
    }
}
