//! Rule documents.
//!
//! ```json
//! {"institution": "versailles", "language": null,
//!  "rules": [{"label": "title",
//!             "per_field": ["title"],
//!             "emit": [["$object", "P102", "node:title:E35"],
//!                      ["node:title:E35", "rdfs:label", "$value"]]}]}
//! ```
//!
//! Slots: `$object`, `$value`, `node:<role>:<class>`, `term:<class>`,
//! `term:<class>:<text>`, `const:<iri or prefix:local>`, `lit:<text>[@lang]`.
//!
//! A node role is shared by every rule of the record unless the rule lists it
//! in `per_field`, in which case each field occurrence mints its own node.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::ontology::Ontology;
use crate::store::{Iri, Literal};
use crate::text::normalize_value;

/// One position of a triple template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    /// The record's object node.
    Object,
    /// The field value as a literal.
    Value,
    /// A minted intermediate node of the given class.
    Node {
        role: String,
        class: String,
    },
    /// A vocabulary node whose IRI derives from its text; `None` means the
    /// field value.
    Term {
        class: String,
        text: Option<String>,
    },
    ConstIri(Iri),
    ConstLiteral(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleTemplate {
    pub subject: Slot,
    /// Ontology property id.
    pub predicate: String,
    pub object: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRule {
    /// Applies to every institution when `None`.
    pub institution: Option<String>,
    /// The label as written in the rule document.
    pub label: String,
    /// Normalized, case-folded label used for matching.
    pub label_key: String,
    pub emit: Vec<TripleTemplate>,
    /// Roles minted once per field occurrence instead of once per record.
    pub per_field: BTreeSet<String>,
    /// Language tag for literals produced by this rule.
    pub language: Option<String>,
}

impl MappingRule {
    pub fn applies_to(&self, institution: &str) -> bool {
        self.institution.as_deref().is_none_or(|i| i == institution)
    }
}

/// Rules from one or more rule documents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<MappingRule>,
    documents: Vec<DocumentSettings>,
    roles: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct DocumentSettings {
    institution: Option<String>,
    language: Option<String>,
    object_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule {rule:?}: unknown property {property:?}")]
    UnknownPropertyInRule { rule: String, property: String },
    #[error("node role {role:?} used with classes {first} and {second}")]
    InconsistentNodeRole {
        role: String,
        first: String,
        second: String,
    },
    #[error("malformed template: {0}")]
    MalformedTemplate(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDocument {
    #[serde(default)]
    institution: Option<String>,
    #[serde(default)]
    language: Option<String>,
    #[serde(default)]
    object_class: Option<String>,
    rules: Vec<RuleEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    label: String,
    emit: Vec<[String; 3]>,
    #[serde(default)]
    per_field: Vec<String>,
}

/// The matching key for a field or rule label: normalized, lower-cased, with
/// a trailing colon removed ("N° d'inventaire:" matches "N° d'inventaire").
pub fn label_key(label: &str) -> String {
    normalize_value(label).trim_end_matches(':').trim_end().to_lowercase()
}

/// Display form of a field label: normalized, trailing colon removed.
pub fn label_text(label: &str) -> String {
    normalize_value(label).trim_end_matches(':').trim_end().to_string()
}

pub fn parse_rules(doc: &str, ont: &Ontology) -> Result<RuleSet, RuleError> {
    let doc: RuleDocument =
        serde_json::from_str(doc).map_err(|e| RuleError::MalformedTemplate(format!("invalid rule document: {e}")))?;
    if let Some(lang) = &doc.language {
        if !crate::store::is_lang_tag(lang) {
            return Err(RuleError::MalformedTemplate(format!("invalid language tag {lang:?}")));
        }
    }
    if let Some(class) = &doc.object_class {
        if ont.class(class).is_none() {
            return Err(RuleError::MalformedTemplate(format!(
                "object_class {class:?} is not a declared class"
            )));
        }
    }

    let mut set = RuleSet {
        documents: vec![DocumentSettings {
            institution: doc.institution.clone(),
            language: doc.language.clone(),
            object_class: doc.object_class.clone(),
        }],
        ..RuleSet::default()
    };
    for entry in doc.rules {
        let label_key = label_key(&entry.label);
        if label_key.is_empty() {
            return Err(RuleError::MalformedTemplate("rule label is empty".into()));
        }
        if entry.emit.is_empty() {
            return Err(RuleError::MalformedTemplate(format!(
                "rule {:?} emits nothing",
                entry.label
            )));
        }
        let mut emit = Vec::with_capacity(entry.emit.len());
        for [s, p, o] in &entry.emit {
            if ont.property(p).is_none() {
                return Err(RuleError::UnknownPropertyInRule {
                    rule: entry.label.clone(),
                    property: p.clone(),
                });
            }
            let subject = parse_slot(s, ont)?;
            if matches!(subject, Slot::Value | Slot::ConstLiteral(_)) {
                return Err(RuleError::MalformedTemplate(format!(
                    "rule {:?}: literal slot {s:?} in subject position",
                    entry.label
                )));
            }
            let object = parse_slot(o, ont)?;
            emit.push(TripleTemplate {
                subject,
                predicate: p.clone(),
                object,
            });
        }
        let used_roles: BTreeSet<&str> = emit
            .iter()
            .flat_map(|t| [&t.subject, &t.object])
            .filter_map(|s| match s {
                Slot::Node { role, .. } => Some(role.as_str()),
                _ => None,
            })
            .collect();
        for role in &entry.per_field {
            if !used_roles.contains(role.as_str()) {
                return Err(RuleError::MalformedTemplate(format!(
                    "rule {:?}: per_field role {role:?} is not used by any template",
                    entry.label
                )));
            }
        }
        set.rules.push(MappingRule {
            institution: doc.institution.clone(),
            label: entry.label,
            label_key,
            emit,
            per_field: entry.per_field.into_iter().collect(),
            language: doc.language.clone(),
        });
    }
    set.check_roles()?;
    Ok(set)
}

fn parse_slot(text: &str, ont: &Ontology) -> Result<Slot, RuleError> {
    let malformed = |why: &str| RuleError::MalformedTemplate(format!("slot {text:?}: {why}"));
    let declared = |class: &str| ont.class(class).is_some();

    if text == "$object" {
        return Ok(Slot::Object);
    }
    if text == "$value" {
        return Ok(Slot::Value);
    }
    if let Some(rest) = text.strip_prefix("node:") {
        let (role, class) = rest
            .split_once(':')
            .ok_or_else(|| malformed("expected node:<role>:<class>"))?;
        if role.is_empty() {
            return Err(malformed("empty role"));
        }
        if !declared(class) {
            return Err(malformed("class is not declared"));
        }
        return Ok(Slot::Node {
            role: role.to_string(),
            class: class.to_string(),
        });
    }
    if let Some(rest) = text.strip_prefix("term:") {
        if declared(rest) {
            return Ok(Slot::Term {
                class: rest.to_string(),
                text: None,
            });
        }
        // Class ids may themselves contain ':' (e.g. prov:Agent); take the
        // first split whose left side is a declared class.
        for (pos, _) in rest.match_indices(':') {
            let (class, term_text) = (&rest[..pos], &rest[pos + 1..]);
            if declared(class) {
                let term_text = normalize_value(term_text);
                if term_text.is_empty() {
                    return Err(malformed("empty term text"));
                }
                return Ok(Slot::Term {
                    class: class.to_string(),
                    text: Some(term_text),
                });
            }
        }
        return Err(malformed("class is not declared"));
    }
    if let Some(rest) = text.strip_prefix("const:") {
        return expand_iri(rest, ont)
            .map(Slot::ConstIri)
            .ok_or_else(|| malformed("not an IRI"));
    }
    if let Some(rest) = text.strip_prefix("lit:") {
        if let Some((lexical, lang)) = rest.rsplit_once('@') {
            if crate::store::is_lang_tag(lang) {
                return Ok(Slot::ConstLiteral(Literal::lang(lexical, lang)));
            }
        }
        return Ok(Slot::ConstLiteral(Literal::simple(rest)));
    }
    Err(malformed("unknown slot syntax"))
}

/// `prefix:local` against the ontology namespaces, else an absolute IRI.
fn expand_iri(text: &str, ont: &Ontology) -> Option<Iri> {
    if let Some((prefix, local)) = text.split_once(':') {
        if let Some(ns) = ont.namespaces().get(prefix) {
            return Iri::new(format!("{ns}{local}")).ok();
        }
    }
    Iri::new(text).ok()
}

impl RuleSet {
    /// Appends the rules of `other`. Node roles must stay consistent.
    pub fn merge(&mut self, other: RuleSet) -> Result<(), RuleError> {
        let mut merged = self.clone();
        merged.rules.extend(other.rules);
        merged.documents.extend(other.documents);
        merged.check_roles()?;
        *self = merged;
        Ok(())
    }

    /// Gives literals a language tag wherever the rule documents left it
    /// unset.
    pub fn set_default_language(&mut self, lang: &str) -> Result<(), RuleError> {
        if !crate::store::is_lang_tag(lang) {
            return Err(RuleError::MalformedTemplate(format!("invalid language tag {lang:?}")));
        }
        for d in self.documents.iter_mut().filter(|d| d.language.is_none()) {
            d.language = Some(lang.to_string());
        }
        for r in self.rules.iter_mut().filter(|r| r.language.is_none()) {
            r.language = Some(lang.to_string());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Rules matching a field label for the given institution, in order.
    pub fn matching<'a>(
        &'a self,
        institution: &'a str,
        label: &str,
    ) -> impl Iterator<Item = (usize, &'a MappingRule)> + 'a {
        let key = label_key(label);
        self.rules
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.label_key == key && r.applies_to(institution))
    }

    /// Literal language for an institution: from the first applicable
    /// document that sets one.
    pub fn language_for(&self, institution: &str) -> Option<&str> {
        self.applicable_documents(institution)
            .into_iter()
            .find_map(|d| d.language.as_deref())
    }

    /// Class of the record's object node; `E22` unless a document says otherwise.
    pub fn object_class_for(&self, institution: &str) -> &str {
        self.applicable_documents(institution)
            .into_iter()
            .find_map(|d| d.object_class.as_deref())
            .unwrap_or("E22")
    }

    /// Node roles and their classes.
    pub fn roles(&self) -> &BTreeMap<String, String> {
        &self.roles
    }

    fn applicable_documents(&self, institution: &str) -> Vec<&DocumentSettings> {
        // Institution-specific documents take precedence over generic ones.
        let specific = self
            .documents
            .iter()
            .filter(|d| d.institution.as_deref() == Some(institution));
        let generic = self.documents.iter().filter(|d| d.institution.is_none());
        specific.chain(generic).collect()
    }

    fn check_roles(&mut self) -> Result<(), RuleError> {
        let mut roles: BTreeMap<String, String> = BTreeMap::new();
        for template in self.rules.iter().flat_map(|r| &r.emit) {
            for slot in [&template.subject, &template.object] {
                if let Slot::Node { role, class } = slot {
                    match roles.get(role) {
                        Some(existing) if existing != class => {
                            return Err(RuleError::InconsistentNodeRole {
                                role: role.clone(),
                                first: existing.clone(),
                                second: class.clone(),
                            });
                        }
                        Some(_) => {}
                        None => {
                            roles.insert(role.clone(), class.clone());
                        }
                    }
                }
            }
        }
        self.roles = roles;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ont() -> &'static Ontology {
        Ontology::builtin()
    }

    fn doc(rules: &str) -> String {
        format!(r#"{{"institution": null, "language": null, "rules": [{rules}]}}"#)
    }

    #[test]
    fn unknown_property() {
        let err = parse_rules(
            &doc(r#"{"label": "x", "emit": [["$object", "P999", "$value"]]}"#),
            ont(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            RuleError::UnknownPropertyInRule {
                rule: "x".into(),
                property: "P999".into()
            }
        );
    }

    #[test]
    fn inconsistent_role() {
        let rules = r#"{"label": "a", "emit": [["node:production:E12", "P108", "$object"]]},
                       {"label": "b", "emit": [["node:production:E8", "P24", "$object"]]}"#;
        let err = parse_rules(&doc(rules), ont()).unwrap_err();
        assert!(matches!(err, RuleError::InconsistentNodeRole { ref role, .. } if role == "production"));
    }

    #[test]
    fn inconsistent_role_across_merged_documents() {
        let mut a = parse_rules(
            &doc(r#"{"label": "a", "emit": [["node:production:E12", "P108", "$object"]]}"#),
            ont(),
        )
        .unwrap();
        let b = parse_rules(
            &doc(r#"{"label": "b", "emit": [["node:production:E8", "P24", "$object"]]}"#),
            ont(),
        )
        .unwrap();
        assert!(a.merge(b).is_err());
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn malformed_templates() {
        for rule in [
            r#"{"label": "x", "emit": [["$value", "P3", "$object"]]}"#,
            r#"{"label": "x", "emit": [["lit:abc", "P3", "$object"]]}"#,
            r#"{"label": "x", "emit": [["$object", "P2", "term:E999"]]}"#,
            r#"{"label": "x", "emit": [["$object", "P2", "node:role:E999"]]}"#,
            r#"{"label": "x", "emit": [["$object", "P2", "node:E55"]]}"#,
            r#"{"label": "x", "emit": [["$object", "P2", "weird"]]}"#,
            r#"{"label": "x", "emit": [["$object", "P2", "const:not an iri"]]}"#,
            r#"{"label": "x", "emit": []}"#,
            r#"{"label": " ", "emit": [["$object", "P3", "$value"]]}"#,
            r#"{"label": "x", "per_field": ["nope"], "emit": [["$object", "P3", "$value"]]}"#,
        ] {
            let err = parse_rules(&doc(rule), ont()).unwrap_err();
            assert!(matches!(err, RuleError::MalformedTemplate(_)), "{rule}: {err:?}");
        }
        assert!(parse_rules("{", ont()).is_err());
    }

    #[test]
    fn slot_syntax() {
        let o = ont();
        assert_eq!(parse_slot("$object", o).unwrap(), Slot::Object);
        assert_eq!(
            parse_slot("term:E40:Château de Versailles", o).unwrap(),
            Slot::Term {
                class: "E40".into(),
                text: Some("Château de Versailles".into())
            }
        );
        assert_eq!(
            parse_slot("term:prov:Agent", o).unwrap(),
            Slot::Term {
                class: "prov:Agent".into(),
                text: None
            }
        );
        assert_eq!(
            parse_slot("term:prov:Agent:cnn v2", o).unwrap(),
            Slot::Term {
                class: "prov:Agent".into(),
                text: Some("cnn v2".into())
            }
        );
        assert_eq!(
            parse_slot("const:crm:E55_Type", o).unwrap(),
            Slot::ConstIri(Iri::new("http://www.cidoc-crm.org/cidoc-crm/E55_Type").unwrap())
        );
        assert_eq!(
            parse_slot("const:http://example.org/x", o).unwrap(),
            Slot::ConstIri(Iri::new("http://example.org/x").unwrap())
        );
        assert_eq!(
            parse_slot("lit:soie@fr", o).unwrap(),
            Slot::ConstLiteral(Literal::lang("soie", "fr"))
        );
        assert_eq!(
            parse_slot("lit:me@example.org", o).unwrap(),
            Slot::ConstLiteral(Literal::simple("me@example.org"))
        );
    }

    #[test]
    fn label_keys() {
        assert_eq!(label_key("N° d'inventaire:"), label_key("N° d'inventaire"));
        assert_eq!(label_key("TITLE"), "title");
        assert_ne!(label_key("Désignation"), label_key("Designation"));
        assert_eq!(label_text(" Historique : "), "Historique");
    }

    #[test]
    fn default_language_fills_gaps_only() {
        let mut set = parse_rules(
            &doc(r#"{"label": "title", "emit": [["$object", "P3", "$value"]]}"#),
            ont(),
        )
        .unwrap();
        set.merge(
            parse_rules(
                r#"{"institution": "versailles", "language": "fr", "rules": [{"label": "x", "emit": [["$object", "P3", "$value"]]}]}"#,
                ont(),
            )
            .unwrap(),
        )
        .unwrap();
        set.set_default_language("en").unwrap();
        assert_eq!(set.language_for("vam"), Some("en"));
        assert_eq!(set.language_for("versailles"), Some("fr"));
        assert_eq!(set.rules[1].language.as_deref(), Some("fr"));
        assert!(set.set_default_language("not a tag").is_err());
    }

    #[test]
    fn institution_scoping() {
        let text = r#"{"institution": "versailles", "language": "fr", "object_class": "T7",
                       "rules": [{"label": "title", "emit": [["$object", "P3", "$value"]]}]}"#;
        let set = parse_rules(text, ont()).unwrap();
        assert_eq!(set.matching("versailles", "Title").count(), 1);
        assert_eq!(set.matching("vam", "Title").count(), 0);
        assert_eq!(set.language_for("versailles"), Some("fr"));
        assert_eq!(set.language_for("vam"), None);
        assert_eq!(set.object_class_for("versailles"), "T7");
        assert_eq!(set.object_class_for("vam"), "E22");
    }
}
