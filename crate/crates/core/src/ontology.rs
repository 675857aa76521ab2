//! Ontology loading, subclass reasoning and graph validation.
//!
//! An ontology is a set of classes with a parent relation and a set of
//! properties with domain/range signatures. The built-in document covers the
//! CIDOC CRM classes and properties used by the shipped mappings, the CRMsci
//! observation pattern, the SILKNOW extension classes and the PROV terms used
//! for prediction provenance. Anything else is added by loading a document.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::store::{Graph, Iri, Term, Triple};
use crate::vocab::RDF_TYPE;

/// The ontology document shipped with the toolkit.
pub const BUILTIN_ONTOLOGY: &str = include_str!("../data/ontology.json");

/// Range marker for literal-valued properties.
pub const LITERAL_MARKER: &str = "@literal";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyClass {
    pub id: String,
    pub iri: Iri,
    pub label: String,
    pub parents: Vec<String>,
    /// Namespace IRI owning the class, when it matches a declared namespace.
    pub namespace: Option<String>,
    /// Whether literals may stand for instances of this class directly.
    pub literal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyRange {
    Literal,
    Class(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyProperty {
    pub id: String,
    pub iri: Iri,
    pub label: String,
    pub domain: String,
    pub range: PropertyRange,
    pub parents: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DefectKind {
    CycleDetected,
    DanglingReference,
    DuplicateId,
}

impl DefectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DefectKind::CycleDetected => "CYCLE_DETECTED",
            DefectKind::DanglingReference => "DANGLING_REFERENCE",
            DefectKind::DuplicateId => "DUPLICATE_ID",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Defect {
    pub kind: DefectKind,
    pub message: String,
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OntologyError {
    #[error("malformed ontology document: {0}")]
    Malformed(String),
    #[error("ontology has {} defect(s): {}", .0.len(), join_defects(.0))]
    Defects(Vec<Defect>),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
}

fn join_defects(defects: &[Defect]) -> String {
    defects.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl OntologyError {
    /// Defects of the given kind, for tests and reporting.
    pub fn defects(&self) -> &[Defect] {
        match self {
            OntologyError::Defects(d) => d,
            _ => &[],
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    namespaces: BTreeMap<String, String>,
    classes: Vec<ClassDoc>,
    properties: Vec<PropertyDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    id: String,
    iri: String,
    label: String,
    #[serde(default)]
    parents: Vec<String>,
    #[serde(default)]
    literal: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PropertyDoc {
    id: String,
    iri: String,
    label: String,
    domain: String,
    range: String,
    #[serde(default)]
    parents: Vec<String>,
}

/// A closed, acyclic ontology. Immutable after loading.
#[derive(Debug, Clone)]
pub struct Ontology {
    namespaces: BTreeMap<String, String>,
    classes: BTreeMap<String, OntologyClass>,
    properties: BTreeMap<String, OntologyProperty>,
    class_by_iri: HashMap<Iri, String>,
    property_by_iri: HashMap<Iri, String>,
    /// Reflexive-transitive ancestors of every class.
    class_ancestors: HashMap<String, BTreeSet<String>>,
    property_ancestors: HashMap<String, BTreeSet<String>>,
}

/// Parses and checks an ontology definition document.
///
/// Every defect is reported, not just the first.
pub fn load_ontology(doc: &str) -> Result<Ontology, OntologyError> {
    let doc: Document = serde_json::from_str(doc).map_err(|e| OntologyError::Malformed(e.to_string()))?;
    let mut defects = Vec::new();

    let mut namespaces = BTreeMap::new();
    for (prefix, ns) in doc.namespaces {
        if Iri::new(ns.as_str()).is_err() {
            return Err(OntologyError::Malformed(format!(
                "namespace {prefix:?} is not an absolute IRI"
            )));
        }
        namespaces.insert(prefix, ns);
    }

    let mut classes: BTreeMap<String, OntologyClass> = BTreeMap::new();
    let mut class_by_iri = HashMap::new();
    for c in doc.classes {
        let iri = Iri::new(c.iri.as_str()).map_err(|e| OntologyError::Malformed(format!("class {}: {e}", c.id)))?;
        if classes.contains_key(&c.id) {
            defects.push(defect(
                DefectKind::DuplicateId,
                format!("class id {} declared twice", c.id),
            ));
            continue;
        }
        if let Some(other) = class_by_iri.insert(iri.clone(), c.id.clone()) {
            defects.push(defect(
                DefectKind::DuplicateId,
                format!("classes {other} and {} share IRI {}", c.id, iri.as_str()),
            ));
        }
        let namespace = namespace_of(&namespaces, iri.as_str());
        classes.insert(
            c.id.clone(),
            OntologyClass {
                id: c.id,
                iri,
                label: c.label,
                parents: c.parents,
                namespace,
                literal: c.literal,
            },
        );
    }

    let mut properties: BTreeMap<String, OntologyProperty> = BTreeMap::new();
    let mut property_by_iri = HashMap::new();
    for p in doc.properties {
        let iri = Iri::new(p.iri.as_str()).map_err(|e| OntologyError::Malformed(format!("property {}: {e}", p.id)))?;
        if properties.contains_key(&p.id) {
            defects.push(defect(
                DefectKind::DuplicateId,
                format!("property id {} declared twice", p.id),
            ));
            continue;
        }
        if let Some(other) = property_by_iri.insert(iri.clone(), p.id.clone()) {
            defects.push(defect(
                DefectKind::DuplicateId,
                format!("properties {other} and {} share IRI {}", p.id, iri.as_str()),
            ));
        }
        let range = if p.range == LITERAL_MARKER {
            PropertyRange::Literal
        } else {
            PropertyRange::Class(p.range)
        };
        properties.insert(
            p.id.clone(),
            OntologyProperty {
                id: p.id,
                iri,
                label: p.label,
                domain: p.domain,
                range,
                parents: p.parents,
            },
        );
    }

    // Closure under reference.
    for c in classes.values() {
        for parent in &c.parents {
            if !classes.contains_key(parent) {
                defects.push(defect(
                    DefectKind::DanglingReference,
                    format!("class {} has undeclared parent {parent}", c.id),
                ));
            }
        }
    }
    for p in properties.values() {
        if !classes.contains_key(&p.domain) {
            defects.push(defect(
                DefectKind::DanglingReference,
                format!("property {} has undeclared domain {}", p.id, p.domain),
            ));
        }
        if let PropertyRange::Class(range) = &p.range {
            if !classes.contains_key(range) {
                defects.push(defect(
                    DefectKind::DanglingReference,
                    format!("property {} has undeclared range {range}", p.id),
                ));
            }
        }
        for parent in &p.parents {
            if !properties.contains_key(parent) {
                defects.push(defect(
                    DefectKind::DanglingReference,
                    format!("property {} has undeclared parent {parent}", p.id),
                ));
            }
        }
    }

    let class_edges: BTreeMap<&str, Vec<&str>> = classes
        .values()
        .map(|c| (c.id.as_str(), c.parents.iter().map(String::as_str).collect()))
        .collect();
    for cycle in find_cycles(&class_edges) {
        defects.push(defect(
            DefectKind::CycleDetected,
            format!("subclass cycle: {}", cycle.join(" -> ")),
        ));
    }
    let property_edges: BTreeMap<&str, Vec<&str>> = properties
        .values()
        .map(|p| (p.id.as_str(), p.parents.iter().map(String::as_str).collect()))
        .collect();
    for cycle in find_cycles(&property_edges) {
        defects.push(defect(
            DefectKind::CycleDetected,
            format!("subproperty cycle: {}", cycle.join(" -> ")),
        ));
    }

    if !defects.is_empty() {
        defects.sort();
        defects.dedup();
        return Err(OntologyError::Defects(defects));
    }

    let class_ancestors = ancestors(&class_edges);
    let property_ancestors = ancestors(&property_edges);
    Ok(Ontology {
        namespaces,
        classes,
        properties,
        class_by_iri,
        property_by_iri,
        class_ancestors,
        property_ancestors,
    })
}

fn defect(kind: DefectKind, message: String) -> Defect {
    Defect { kind, message }
}

fn namespace_of(namespaces: &BTreeMap<String, String>, iri: &str) -> Option<String> {
    namespaces
        .values()
        .filter(|ns| iri.starts_with(ns.as_str()))
        .max_by_key(|ns| ns.len())
        .cloned()
}

/// Cycles found by depth-first search over parent edges; each reported cycle
/// is the path from the first revisited node back to itself. Edges to
/// undeclared nodes are ignored (reported separately as dangling).
fn find_cycles(edges: &BTreeMap<&str, Vec<&str>>) -> Vec<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        OnStack,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut HashMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
        cycles: &mut Vec<Vec<String>>,
    ) {
        marks.insert(node, Mark::OnStack);
        stack.push(node);
        for &next in edges.get(node).into_iter().flatten() {
            if !edges.contains_key(next) {
                continue;
            }
            match marks.get(next).copied().unwrap_or(Mark::Fresh) {
                Mark::Fresh => visit(next, edges, marks, stack, cycles),
                Mark::OnStack => {
                    let start = stack.iter().position(|n| *n == next).expect("on stack");
                    let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(next.to_string());
                    cycles.push(cycle);
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks.insert(node, Mark::Done);
    }

    let mut marks = HashMap::new();
    let mut cycles = Vec::new();
    for &node in edges.keys() {
        if marks.get(node).copied().unwrap_or(Mark::Fresh) == Mark::Fresh {
            visit(node, edges, &mut marks, &mut Vec::new(), &mut cycles);
        }
    }
    cycles
}

/// Reflexive-transitive closure of the parent relation, by BFS from each node.
fn ancestors(edges: &BTreeMap<&str, Vec<&str>>) -> HashMap<String, BTreeSet<String>> {
    edges
        .keys()
        .map(|&start| {
            let mut seen = BTreeSet::from([start.to_string()]);
            let mut queue = vec![start];
            while let Some(node) = queue.pop() {
                for &parent in edges.get(node).into_iter().flatten() {
                    if seen.insert(parent.to_string()) {
                        queue.push(parent);
                    }
                }
            }
            (start.to_string(), seen)
        })
        .collect()
}

impl Ontology {
    /// The built-in ontology, loaded once.
    pub fn builtin() -> &'static Ontology {
        static BUILTIN: OnceLock<Ontology> = OnceLock::new();
        BUILTIN.get_or_init(|| load_ontology(BUILTIN_ONTOLOGY).expect("built-in ontology document is valid"))
    }

    pub fn namespaces(&self) -> &BTreeMap<String, String> {
        &self.namespaces
    }

    pub fn classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes.values()
    }

    pub fn properties(&self) -> impl Iterator<Item = &OntologyProperty> {
        self.properties.values()
    }

    pub fn class(&self, id: &str) -> Option<&OntologyClass> {
        self.classes.get(id)
    }

    pub fn property(&self, id: &str) -> Option<&OntologyProperty> {
        self.properties.get(id)
    }

    pub fn class_by_iri(&self, iri: &Iri) -> Option<&OntologyClass> {
        self.class_by_iri.get(iri).and_then(|id| self.classes.get(id))
    }

    pub fn property_by_iri(&self, iri: &Iri) -> Option<&OntologyProperty> {
        self.property_by_iri.get(iri).and_then(|id| self.properties.get(id))
    }

    /// IRI of a declared class. Panics on unknown ids; callers resolve ids
    /// that were checked when rules or templates were parsed.
    pub fn class_iri(&self, id: &str) -> &Iri {
        &self
            .classes
            .get(id)
            .unwrap_or_else(|| panic!("class {id} is not declared"))
            .iri
    }

    /// IRI of a declared property. Panics on unknown ids, like [`Self::class_iri`].
    pub fn property_iri(&self, id: &str) -> &Iri {
        &self
            .properties
            .get(id)
            .unwrap_or_else(|| panic!("property {id} is not declared"))
            .iri
    }

    /// Reflexive, transitive subclass test.
    pub fn is_subclass_of(&self, class: &str, ancestor: &str) -> Result<bool, OntologyError> {
        for id in [class, ancestor] {
            if !self.classes.contains_key(id) {
                return Err(OntologyError::UnknownClass(id.to_string()));
            }
        }
        Ok(self.class_ancestors[class].contains(ancestor))
    }

    /// Reflexive, transitive subproperty test; `false` for unknown ids.
    pub fn is_subproperty_of(&self, property: &str, ancestor: &str) -> bool {
        self.property_ancestors
            .get(property)
            .is_some_and(|a| a.contains(ancestor))
    }

    /// Whether a literal may stand for an instance of `class`: the class or
    /// one of its ancestors is flagged literal-valued.
    pub fn is_literal_valued(&self, class: &str) -> bool {
        self.class_ancestors
            .get(class)
            .is_some_and(|a| a.iter().any(|c| self.classes[c].literal))
    }

    /// Declared classes attached to `node` via `rdf:type`. IRIs of declared
    /// properties count as instances of `rdf:Property` when that class exists.
    fn classes_of<'g>(&'g self, graph: &'g Graph, node: &Iri) -> Vec<&'g str> {
        let mut out: Vec<&str> = graph
            .types_of(node)
            .filter_map(|t| self.class_by_iri(t))
            .map(|c| c.id.as_str())
            .collect();
        if self.property_by_iri.contains_key(node) && self.classes.contains_key("rdf:Property") {
            out.push("rdf:Property");
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn conforms(&self, class: &str, required: &str, closure: bool) -> bool {
        if closure {
            self.class_ancestors[class].contains(required)
        } else {
            class == required
        }
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    UnknownProperty,
    DomainMismatch,
    RangeMismatch,
    /// Cannot arise from a [`Graph`], whose subjects are IRIs by construction;
    /// kept so reports from other statement sources share one vocabulary.
    LiteralInSubject,
    UntypedNodeWarning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::UnknownProperty => "UNKNOWN_PROPERTY",
            ViolationKind::DomainMismatch => "DOMAIN_MISMATCH",
            ViolationKind::RangeMismatch => "RANGE_MISMATCH",
            ViolationKind::LiteralInSubject => "LITERAL_IN_SUBJECT",
            ViolationKind::UntypedNodeWarning => "UNTYPED_NODE_WARNING",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            ViolationKind::UntypedNodeWarning => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub triple: Triple,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.kind.severity() {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        };
        write!(f, "{level} {}: {} [{}]", self.kind.as_str(), self.message, self.triple)
    }
}

/// Violations sorted by triple, then kind; identical for any insertion order
/// of the validated graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn error_count(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| v.kind.severity() == Severity::Error)
            .count()
    }

    pub fn warning_count(&self) -> usize {
        self.violations.len() - self.error_count()
    }

    pub fn has_errors(&self) -> bool {
        self.error_count() > 0
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    /// Accept subclasses of a property's domain or range. Turning this off
    /// requires exact class matches.
    pub subclass_closure: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { subclass_closure: true }
    }
}

pub fn validate_graph(ont: &Ontology, graph: &Graph) -> ValidationReport {
    validate_graph_with(ont, graph, ValidationOptions::default())
}

pub fn validate_graph_with(ont: &Ontology, graph: &Graph, opts: ValidationOptions) -> ValidationReport {
    let closure = opts.subclass_closure;
    let mut violations = Vec::new();
    let mut push = |t: &Triple, kind: ViolationKind, message: String| {
        violations.push(Violation {
            triple: t.clone(),
            kind,
            message,
        })
    };

    for t in graph.iter() {
        let triple = t.to_owned();
        if t.predicate.as_str() == RDF_TYPE {
            if let Term::Literal(_) = t.object {
                push(
                    &triple,
                    ViolationKind::RangeMismatch,
                    "rdf:type object is a literal".into(),
                );
            }
            continue;
        }
        let Some(prop) = ont.property_by_iri(t.predicate) else {
            push(
                &triple,
                ViolationKind::UnknownProperty,
                format!("{} is not a declared property", t.predicate),
            );
            continue;
        };

        let subject_classes = ont.classes_of(graph, t.subject);
        if subject_classes.is_empty() {
            push(
                &triple,
                ViolationKind::UntypedNodeWarning,
                format!("subject {} has no declared type", t.subject),
            );
        } else if !subject_classes.iter().any(|c| ont.conforms(c, &prop.domain, closure)) {
            push(
                &triple,
                ViolationKind::DomainMismatch,
                format!(
                    "{} expects subject of class {}, found {}",
                    prop.id,
                    prop.domain,
                    subject_classes.join(", ")
                ),
            );
        }

        match (t.object, &prop.range) {
            (Term::Literal(_), PropertyRange::Literal) => {}
            (Term::Literal(_), PropertyRange::Class(range)) => {
                if !ont.is_literal_valued(range) {
                    push(
                        &triple,
                        ViolationKind::RangeMismatch,
                        format!("{} expects a node of class {range}, found a literal", prop.id),
                    );
                }
            }
            (Term::Iri(_), PropertyRange::Literal) => push(
                &triple,
                ViolationKind::RangeMismatch,
                format!("{} expects a literal, found a node", prop.id),
            ),
            (Term::Iri(object), PropertyRange::Class(range)) => {
                let object_classes = ont.classes_of(graph, object);
                if object_classes.is_empty() {
                    push(
                        &triple,
                        ViolationKind::UntypedNodeWarning,
                        format!("object {object} has no declared type"),
                    );
                } else if !object_classes.iter().any(|c| ont.conforms(c, range, closure)) {
                    push(
                        &triple,
                        ViolationKind::RangeMismatch,
                        format!(
                            "{} expects object of class {range}, found {}",
                            prop.id,
                            object_classes.join(", ")
                        ),
                    );
                }
            }
        }
    }
    violations.sort();
    ValidationReport { violations }
}
