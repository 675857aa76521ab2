//! Declarative field-to-triple mapping.

mod mint;
mod rules;

use std::collections::BTreeSet;

pub use mint::{check_base, mint_iri, vocab_iri, MintContext, MintContextError};
pub use rules::{label_key, label_text, parse_rules, MappingRule, RuleError, RuleSet, Slot, TripleTemplate};

use crate::ontology::Ontology;
use crate::records::{Field, Record};
use crate::store::{Graph, Iri, Literal, Term, Triple};
use crate::vocab::{RDFS_LABEL, RDF_TYPE};

/// Rules for the Versailles catalog.
pub const VERSAILLES_RULES: &str = include_str!("../../data/rules/versailles.rules.json");
/// Acquisition rules usable with any catalog.
pub const ACQUISITION_RULES: &str = include_str!("../../data/rules/acquisition.rules.json");

/// Role of the record's object node.
pub const OBJECT_ROLE: &str = "object";
/// Role of the observation node minted for unmatched fields.
pub const OBSERVATION_ROLE: &str = "observation";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldOutcome {
    /// Indexes into `RuleSet::rules` of the rules that fired, in order.
    Rules(Vec<usize>),
    /// No rule matched; the value went to an observation note.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldLog {
    pub index: usize,
    pub label: String,
    pub value: String,
    pub outcome: FieldOutcome,
    /// Triples produced for this field, including the typing of nodes
    /// minted for this field alone. Shared nodes and vocabulary terms are
    /// typed in the record and vocabulary lists instead.
    pub triples: Vec<Triple>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingLog {
    pub object: Iri,
    pub fields: Vec<FieldLog>,
    /// Object typing and typing of record-scoped nodes.
    pub record_triples: Vec<Triple>,
    /// `rdf:type` and `rdfs:label` of vocabulary terms.
    pub vocabulary_triples: Vec<Triple>,
}

impl MappingLog {
    pub fn fallbacks(&self) -> impl Iterator<Item = &FieldLog> {
        self.fields.iter().filter(|f| f.outcome == FieldOutcome::Fallback)
    }

    pub fn field(&self, label: &str) -> Option<&FieldLog> {
        let key = label_key(label);
        self.fields.iter().find(|f| label_key(&f.label) == key)
    }
}

struct Emitter<'a> {
    rules: &'a RuleSet,
    ctx: &'a MintContext,
    ont: &'a Ontology,
    object: Iri,
    rdf_type: Iri,
    rdfs_label: Iri,
    graph: Graph,
    record_triples: Vec<Triple>,
    vocabulary_triples: Vec<Triple>,
    typed_record_roles: BTreeSet<String>,
    typed_terms: BTreeSet<Iri>,
}

/// Maps one record. `ctx` must carry the record's own identity.
pub fn apply_rules(rules: &RuleSet, rec: &Record, ctx: &MintContext, ont: &Ontology) -> (Graph, MappingLog) {
    debug_assert_eq!(ctx.institution(), rec.institution);
    debug_assert_eq!(ctx.record_id(), rec.record_id);

    let object = mint_iri(ctx, OBJECT_ROLE, "");
    let mut em = Emitter {
        rules,
        ctx,
        ont,
        object: object.clone(),
        rdf_type: Iri::new_unchecked(RDF_TYPE),
        rdfs_label: Iri::new_unchecked(RDFS_LABEL),
        graph: Graph::new(),
        record_triples: Vec::new(),
        vocabulary_triples: Vec::new(),
        typed_record_roles: BTreeSet::new(),
        typed_terms: BTreeSet::new(),
    };

    let object_class = ont.class_iri(rules.object_class_for(&rec.institution)).clone();
    em.record(Triple::new(object.clone(), em.rdf_type.clone(), object_class));

    let mut fields = Vec::with_capacity(rec.fields.len());
    for (index, field) in rec.fields.iter().enumerate() {
        let matched: Vec<(usize, &MappingRule)> = rules.matching(&rec.institution, &field.label).collect();
        let mut triples = Vec::new();
        let outcome = if matched.is_empty() {
            em.fallback(index, field, &mut triples);
            FieldOutcome::Fallback
        } else {
            for (_, rule) in &matched {
                em.apply_rule(rule, index, field, &mut triples);
            }
            FieldOutcome::Rules(matched.iter().map(|(i, _)| *i).collect())
        };
        log::trace!(
            "{}/{} field {index} {:?}: {outcome:?}",
            rec.institution,
            rec.record_id,
            field.label
        );
        fields.push(FieldLog {
            index,
            label: field.label.clone(),
            value: field.value.clone(),
            outcome,
            triples,
        });
    }

    let log = MappingLog {
        object,
        fields,
        record_triples: em.record_triples,
        vocabulary_triples: em.vocabulary_triples,
    };
    (em.graph, log)
}

/// Parses the record identity into a context and maps the record.
pub fn map_record(
    rules: &RuleSet,
    rec: &Record,
    base_namespace: &str,
    ont: &Ontology,
) -> Result<(Graph, MappingLog), MintContextError> {
    let ctx = MintContext::for_record(base_namespace, rec)?;
    Ok(apply_rules(rules, rec, &ctx, ont))
}

impl Emitter<'_> {
    fn record(&mut self, t: Triple) {
        if self.graph.insert(t.clone()) {
            self.record_triples.push(t);
        }
    }

    fn emit(&mut self, t: Triple, out: &mut Vec<Triple>) {
        self.graph.insert(t.clone());
        if !out.contains(&t) {
            out.push(t);
        }
    }

    fn term(&mut self, class: &str, text: &str, lang: Option<&str>) -> Iri {
        let iri = vocab_iri(self.ctx.base_namespace(), class, text);
        if self.typed_terms.insert(iri.clone()) {
            for t in [
                Triple::new(iri.clone(), self.rdf_type.clone(), self.ont.class_iri(class).clone()),
                Triple::new(
                    iri.clone(),
                    self.rdfs_label.clone(),
                    Literal::with_optional_lang(text, lang),
                ),
            ] {
                if self.graph.insert(t.clone()) {
                    self.vocabulary_triples.push(t);
                }
            }
        }
        iri
    }

    fn node(&mut self, role: &str, class: &str, per_field: bool, index: usize, out: &mut Vec<Triple>) -> Iri {
        let discriminator = if per_field { index.to_string() } else { String::new() };
        let iri = mint_iri(self.ctx, role, &discriminator);
        let typing = Triple::new(iri.clone(), self.rdf_type.clone(), self.ont.class_iri(class).clone());
        if per_field {
            self.emit(typing, out);
        } else if self.typed_record_roles.insert(role.to_string()) {
            self.record(typing);
        }
        iri
    }

    fn bind(&mut self, slot: &Slot, rule: &MappingRule, index: usize, field: &Field, out: &mut Vec<Triple>) -> Term {
        let lang = rule.language.as_deref();
        match slot {
            Slot::Object => self.object.clone().into(),
            Slot::Value => Literal::with_optional_lang(field.value.as_str(), lang).into(),
            Slot::Node { role, class } => self.node(role, class, rule.per_field.contains(role), index, out).into(),
            Slot::Term { class, text } => {
                let text = text.as_deref().unwrap_or(&field.value).to_string();
                self.term(class, &text, lang).into()
            }
            Slot::ConstIri(iri) => iri.clone().into(),
            Slot::ConstLiteral(lit) => lit.clone().into(),
        }
    }

    fn apply_rule(&mut self, rule: &MappingRule, index: usize, field: &Field, out: &mut Vec<Triple>) {
        for template in &rule.emit {
            let Some(predicate) = self.ont.property(&template.predicate).map(|p| p.iri.clone()) else {
                log::warn!(
                    "rule {:?}: property {} is not in this ontology",
                    rule.label,
                    template.predicate
                );
                continue;
            };
            let Term::Iri(subject) = self.bind(&template.subject, rule, index, field, out) else {
                unreachable!("literal subjects are rejected when rules are parsed")
            };
            let object = self.bind(&template.object, rule, index, field, out);
            self.emit(Triple::new(subject, predicate, object), out);
        }
    }

    /// The observation pattern: an S4 node observing the object, typed by
    /// the field label and carrying the value as a note.
    fn fallback(&mut self, index: usize, field: &Field, out: &mut Vec<Triple>) {
        let lang = self.rules.language_for(self.ctx.institution()).map(str::to_string);
        let node = mint_iri(self.ctx, OBSERVATION_ROLE, &index.to_string());
        let label = label_text(&field.label);
        let kind = self.term("E55", &label, lang.as_deref());
        let p = |id: &str| self.ont.property_iri(id).clone();
        let triples = [
            Triple::new(node.clone(), self.rdf_type.clone(), self.ont.class_iri("S4").clone()),
            Triple::new(node.clone(), p("O8"), self.object.clone()),
            Triple::new(node.clone(), p("P2"), kind),
            Triple::new(
                node,
                p("P3"),
                Literal::with_optional_lang(field.value.as_str(), lang.as_deref()),
            ),
        ];
        for t in triples {
            self.emit(t, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::Field;

    fn record(id: &str, fields: &[(&str, &str)]) -> Record {
        Record {
            institution: "versailles".into(),
            record_id: id.into(),
            fields: fields
                .iter()
                .map(|(l, v)| Field {
                    label: l.to_string(),
                    value: v.to_string(),
                })
                .collect(),
        }
    }

    fn rules(text: &str) -> RuleSet {
        parse_rules(text, Ontology::builtin()).unwrap()
    }

    const TITLE: &str = r#"{"institution": null, "language": null, "rules": [
        {"label": "title", "per_field": ["title"], "emit": [
            ["$object", "P102", "node:title:E35"],
            ["node:title:E35", "rdfs:label", "$value"]]}]}"#;

    #[test]
    fn title_row() {
        let rec = record("r", &[("title", "lé de tenture")]);
        let ctx = MintContext::for_record("http://data.silknow.org/", &rec).unwrap();
        let (g, log) = apply_rules(&rules(TITLE), &rec, &ctx, Ontology::builtin());
        assert_eq!(log.fields[0].triples.len(), 3);
        assert_eq!(log.record_triples.len(), 1);
        assert!(log.vocabulary_triples.is_empty());
        assert_eq!(g.len(), 4);
        assert_eq!(log.object, mint_iri(&ctx, "object", ""));
    }

    #[test]
    fn unmatched_field_falls_back() {
        let rec = record("r", &[("Historique:", "Acquis en 1850.")]);
        let (g, log) = map_record(&rules(TITLE), &rec, "http://x/", Ontology::builtin()).unwrap();
        assert_eq!(log.fallbacks().count(), 1);
        let f = &log.fields[0];
        assert_eq!(f.triples.len(), 4);
        let note = Triple::new(
            mint_iri(
                &MintContext::for_record("http://x/", &rec).unwrap(),
                OBSERVATION_ROLE,
                "0",
            ),
            Ontology::builtin().property_iri("P3").clone(),
            Literal::simple("Acquis en 1850."),
        );
        assert!(g.contains(&note));
        let label_term = vocab_iri("http://x/", "E55", "Historique");
        assert!(g.contains(&Triple::new(
            label_term,
            Iri::new_unchecked(RDFS_LABEL),
            Literal::simple("Historique")
        )));
    }

    #[test]
    fn record_scoped_nodes_are_shared() {
        let text = r#"{"institution": null, "language": "fr", "rules": [
            {"label": "Technique", "emit": [["node:production:E12", "P108", "$object"],
                                            ["node:production:E12", "P32", "term:E55"]]},
            {"label": "Lieu", "emit": [["node:production:E12", "P108", "$object"],
                                       ["node:production:E12", "P7", "term:E53"]]}]}"#;
        let rec = record("r", &[("Technique", "damas"), ("Lieu", "Lyon")]);
        let (g, log) = map_record(&rules(text), &rec, "http://x/", Ontology::builtin()).unwrap();
        let ctx = MintContext::for_record("http://x/", &rec).unwrap();
        let production = mint_iri(&ctx, "production", "");
        assert_eq!(g.types_of(&production).count(), 1);
        assert_eq!(log.record_triples.len(), 2);
        // Both fields report the shared P108 link.
        assert_eq!(log.fields[0].triples.len(), 2);
        assert_eq!(log.fields[1].triples.len(), 2);
        assert!(g.contains(&Triple::new(
            vocab_iri("http://x/", "E55", "damas"),
            Iri::new_unchecked(RDFS_LABEL),
            Literal::lang("damas", "fr")
        )));
    }

    #[test]
    fn repeated_fields_get_their_own_nodes() {
        let rec = record("r", &[("title", "a"), ("title", "b")]);
        let (g, log) = map_record(&rules(TITLE), &rec, "http://x/", Ontology::builtin()).unwrap();
        assert_eq!(g.len(), 7);
        assert_ne!(log.fields[0].triples[0], log.fields[1].triples[0]);
    }

    #[test]
    fn every_minted_node_is_typed() {
        let rec = record("r", &[("title", "a"), ("Other", "b")]);
        let (g, _) = map_record(&rules(TITLE), &rec, "http://x/", Ontology::builtin()).unwrap();
        for s in g.subjects() {
            assert!(g.types_of(s).count() > 0, "{s}");
        }
    }
}
