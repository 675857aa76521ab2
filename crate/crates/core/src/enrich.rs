//! Thesaurus reconciliation: string-valued vocabulary nodes are replaced by
//! concept IRIs when their label coincides with a concept label.
//!
//! Thesaurus document:
//!
//! ```json
//! {"concepts": [{"iri": "http://data.silknow.org/vocabulary/168",
//!                "facet": "technique",
//!                "prefLabels": {"fr": "damas", "en": "damask"},
//!                "altLabels": {"en": ["damasked"]}}]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::ontology::Ontology;
use crate::store::{Graph, Iri, Term, Triple};
use crate::text::fold;
use crate::vocab::{RDFS_LABEL, RDF_TYPE, RECONCILED_FROM};

/// The thesaurus shipped as a small sample.
pub const SAMPLE_THESAURUS: &str = include_str!("../data/thesaurus.sample.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Facet {
    Technique,
    Weave,
    Motif,
    Material,
    Style,
    Other,
}

impl Facet {
    pub const ALL: [Facet; 6] = [
        Facet::Technique,
        Facet::Weave,
        Facet::Motif,
        Facet::Material,
        Facet::Style,
        Facet::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Facet::Technique => "technique",
            Facet::Weave => "weave",
            Facet::Motif => "motif",
            Facet::Material => "material",
            Facet::Style => "style",
            Facet::Other => "other",
        }
    }
}

impl FromStr for Facet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Facet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown facet {s:?}"))
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub iri: Iri,
    pub facet: Facet,
    pub pref_labels: BTreeMap<String, String>,
    pub alt_labels: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LabelKind {
    Pref,
    Alt,
}

#[derive(Debug, Clone, Copy)]
struct IndexEntry {
    concept: usize,
    kind: LabelKind,
    lang: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Thesaurus {
    concepts: Vec<Concept>,
    index: HashMap<String, Vec<IndexEntry>>,
    langs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThesaurusError {
    #[error("malformed thesaurus document: {0}")]
    MalformedDocument(String),
    #[error("duplicate concept IRI {0}")]
    DuplicateConceptIri(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThesaurusDocument {
    concepts: Vec<ConceptEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptEntry {
    iri: String,
    facet: String,
    #[serde(rename = "prefLabels")]
    pref_labels: BTreeMap<String, String>,
    #[serde(rename = "altLabels", default)]
    alt_labels: BTreeMap<String, Vec<String>>,
}

pub fn load_thesaurus(doc: &str) -> Result<Thesaurus, ThesaurusError> {
    let malformed = |m: String| ThesaurusError::MalformedDocument(m);
    let doc: ThesaurusDocument = serde_json::from_str(doc).map_err(|e| malformed(e.to_string()))?;
    let mut seen = BTreeSet::new();
    let mut concepts = Vec::with_capacity(doc.concepts.len());
    for (i, entry) in doc.concepts.into_iter().enumerate() {
        let iri = Iri::new(entry.iri.as_str()).map_err(|e| malformed(format!("concepts[{i}]: {e}")))?;
        if !seen.insert(entry.iri.clone()) {
            return Err(ThesaurusError::DuplicateConceptIri(entry.iri));
        }
        let facet = entry
            .facet
            .parse()
            .map_err(|e| malformed(format!("concepts[{i}]: {e}")))?;
        if entry.pref_labels.values().all(|l| fold(l).is_empty()) {
            return Err(malformed(format!("concepts[{i}] ({iri}) has no preferred label")));
        }
        concepts.push(Concept {
            iri,
            facet,
            pref_labels: lower_keys(entry.pref_labels),
            alt_labels: lower_keys(entry.alt_labels),
        });
    }
    Ok(Thesaurus::from_concepts(concepts))
}

fn lower_keys<V>(map: BTreeMap<String, V>) -> BTreeMap<String, V> {
    map.into_iter().map(|(k, v)| (k.to_ascii_lowercase(), v)).collect()
}

impl Thesaurus {
    pub fn from_concepts(concepts: Vec<Concept>) -> Self {
        let mut th = Thesaurus {
            concepts,
            ..Thesaurus::default()
        };
        for ci in 0..th.concepts.len() {
            let labels: Vec<(String, LabelKind, String)> = {
                let c = &th.concepts[ci];
                let prefs = c
                    .pref_labels
                    .iter()
                    .map(|(lang, l)| (lang.clone(), LabelKind::Pref, l.clone()));
                let alts = c
                    .alt_labels
                    .iter()
                    .flat_map(|(lang, ls)| ls.iter().map(move |l| (lang.clone(), LabelKind::Alt, l.clone())));
                prefs.chain(alts).collect()
            };
            for (lang, kind, label) in labels {
                let key = fold(&label);
                if key.is_empty() {
                    continue;
                }
                let lang = th.lang_id(&lang);
                th.index.entry(key).or_default().push(IndexEntry {
                    concept: ci,
                    kind,
                    lang,
                });
            }
        }
        th
    }

    fn lang_id(&mut self, lang: &str) -> usize {
        match self.langs.iter().position(|l| l == lang) {
            Some(i) => i,
            None => {
                self.langs.push(lang.to_string());
                self.langs.len() - 1
            }
        }
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, iri: &Iri) -> Option<&Concept> {
        self.concepts.iter().find(|c| &c.iri == iri)
    }

    /// The shipped sample thesaurus.
    pub fn sample() -> Thesaurus {
        load_thesaurus(SAMPLE_THESAURUS).expect("shipped thesaurus is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchResult {
    Matched(Iri),
    Ambiguous(Vec<Iri>),
    NoMatch,
}

impl MatchResult {
    pub fn matched(&self) -> Option<&Iri> {
        match self {
            MatchResult::Matched(iri) => Some(iri),
            _ => None,
        }
    }
}

pub fn match_concept(th: &Thesaurus, text: &str, facet: Facet, lang: Option<&str>) -> MatchResult {
    match_concept_in(th, text, &[facet], lang)
}

/// Like [`match_concept`] with candidates drawn from several facets.
///
/// Preferred-label hits outrank alternative-label hits. A language tag
/// restricts which labels count.
pub fn match_concept_in(th: &Thesaurus, text: &str, facets: &[Facet], lang: Option<&str>) -> MatchResult {
    let Some(entries) = th.index.get(&fold(text)) else {
        return MatchResult::NoMatch;
    };
    let lang = lang.map(str::to_ascii_lowercase);
    let mut best: BTreeMap<usize, LabelKind> = BTreeMap::new();
    for e in entries {
        let concept = &th.concepts[e.concept];
        if !facets.contains(&concept.facet) {
            continue;
        }
        if let Some(lang) = &lang {
            if th.langs[e.lang] != *lang {
                continue;
            }
        }
        let slot = best.entry(e.concept).or_insert(e.kind);
        *slot = (*slot).min(e.kind);
    }
    let Some(top) = best.values().min().copied() else {
        return MatchResult::NoMatch;
    };
    let mut winners: Vec<Iri> = best
        .iter()
        .filter(|(_, k)| **k == top)
        .map(|(ci, _)| th.concepts[*ci].iri.clone())
        .collect();
    winners.sort();
    if winners.len() == 1 {
        MatchResult::Matched(winners.pop().unwrap())
    } else {
        MatchResult::Ambiguous(winners)
    }
}

/// Which vocabulary classes are reconciled, and against which facet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrichPolicy {
    facets: BTreeMap<Iri, Facet>,
}

impl EnrichPolicy {
    pub fn new(facets: impl IntoIterator<Item = (Iri, Facet)>) -> Self {
        EnrichPolicy {
            facets: facets.into_iter().collect(),
        }
    }

    /// E55 → technique, T21/T32 → weave, T34 → motif, E57 → material,
    /// T11 → style.
    pub fn default_for(ont: &Ontology) -> Self {
        let pairs = [
            ("E55", Facet::Technique),
            ("T21", Facet::Weave),
            ("T32", Facet::Weave),
            ("T34", Facet::Motif),
            ("E57", Facet::Material),
            ("T11", Facet::Style),
        ];
        Self::new(
            pairs
                .into_iter()
                .filter_map(|(id, f)| ont.class(id).map(|c| (c.iri.clone(), f))),
        )
    }

    pub fn facet(&self, class: &Iri) -> Option<Facet> {
        self.facets.get(class).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }
}

impl Default for EnrichPolicy {
    fn default() -> Self {
        Self::default_for(Ontology::builtin())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrichmentEntry {
    pub node: Iri,
    pub label: String,
    pub facets: Vec<Facet>,
    pub result: MatchResult,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnrichmentLog {
    pub entries: Vec<EnrichmentEntry>,
}

impl EnrichmentLog {
    pub fn matched(&self) -> impl Iterator<Item = &EnrichmentEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.result, MatchResult::Matched(_)))
    }

    pub fn ambiguous(&self) -> impl Iterator<Item = &EnrichmentEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.result, MatchResult::Ambiguous(_)))
    }

    pub fn unmatched(&self) -> impl Iterator<Item = &EnrichmentEntry> {
        self.entries.iter().filter(|e| e.result == MatchResult::NoMatch)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Replaces every vocabulary node whose label matches a concept by that
/// concept, adding `(concept hf:reconciledFrom node)`. Nodes that already are
/// the matched concept are left alone, so a second run changes nothing.
pub fn enrich_graph(g: &Graph, th: &Thesaurus, policy: &EnrichPolicy) -> (Graph, EnrichmentLog) {
    let rdf_type = Iri::new_unchecked(RDF_TYPE);
    let rdfs_label = Iri::new_unchecked(RDFS_LABEL);
    let reconciled_from = Iri::new_unchecked(RECONCILED_FROM);

    // Candidate nodes in IRI order: typed with a policy class and labelled.
    let mut candidates: BTreeMap<Iri, Vec<Facet>> = BTreeMap::new();
    for t in g.matching(None, Some(&rdf_type), None) {
        if let Some(facet) = t.object.as_iri().and_then(|c| policy.facet(c)) {
            let facets = candidates.entry(t.subject.clone()).or_default();
            if !facets.contains(&facet) {
                facets.push(facet);
            }
        }
    }

    let mut out = g.clone();
    let mut log = EnrichmentLog::default();
    for (node, mut facets) in candidates {
        facets.sort();
        let Some(label) = g
            .objects(&node, &rdfs_label)
            .filter_map(Term::as_literal)
            .min()
            .cloned()
        else {
            continue;
        };
        let result = match_concept_in(th, label.lexical(), &facets, label.language());
        if let MatchResult::Matched(concept) = &result {
            if *concept == node {
                continue;
            }
            rewrite(&mut out, &node, concept);
            out.insert(Triple::new(concept.clone(), reconciled_from.clone(), node.clone()));
        } else {
            log::debug!("{node}: {:?} not reconciled: {result:?}", label.lexical());
        }
        log.entries.push(EnrichmentEntry {
            node,
            label: label.lexical().to_string(),
            facets,
            result,
        });
    }
    (out, log)
}

/// Substitutes `to` for `from` in every position of every triple.
fn rewrite(g: &mut Graph, from: &Iri, to: &Iri) {
    let from_term = Term::Iri(from.clone());
    let mut affected: Vec<Triple> = g.matching(Some(from), None, None).map(|t| t.to_owned()).collect();
    affected.extend(g.matching(None, Some(from), None).map(|t| t.to_owned()));
    affected.extend(g.matching(None, None, Some(&from_term)).map(|t| t.to_owned()));
    let swap = |iri: &Iri| if iri == from { to.clone() } else { iri.clone() };
    for t in &affected {
        g.remove(t);
    }
    for t in affected {
        let object = match &t.object {
            Term::Iri(iri) => Term::Iri(swap(iri)),
            lit => lit.clone(),
        };
        g.insert(Triple::new(swap(&t.subject), swap(&t.predicate), object));
    }
}
