//! Provenance for classifier predictions.
//!
//! A prediction becomes a directly asserted domain triple plus a reified
//! statement generated by a `prov:Activity`, carrying its confidence as an
//! E54 Dimension. Prediction document:
//!
//! ```json
//! [{"institution": "versailles", "record_id": "…", "property": "technique",
//!   "value": "Damask", "confidence": 0.71,
//!   "source": {"kind": "image", "ref": "http://example.org/img.jpg"},
//!   "agent": "image-classifier", "agent_doc": null,
//!   "at": "2021-03-01T10:00:00Z"}]
//! ```

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::Value;

use crate::enrich::{match_concept_in, Facet, MatchResult, Thesaurus};
use crate::mapping::{mint_iri, vocab_iri, MintContext, MintContextError, OBJECT_ROLE};
use crate::ontology::Ontology;
use crate::store::{Graph, Iri, Literal, Term, Triple};
use crate::vocab::{RDF, RDF_TYPE, XSD_DATE_TIME, XSD_DECIMAL};

/// Decimal places kept for confidence values.
pub const CONFIDENCE_DECIMALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TargetProperty {
    Technique,
    Material,
    Place,
    Time,
    Depiction,
}

impl TargetProperty {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetProperty::Technique => "technique",
            TargetProperty::Material => "material",
            TargetProperty::Place => "place",
            TargetProperty::Time => "time",
            TargetProperty::Depiction => "depiction",
        }
    }

    /// (property id, vocabulary class id, asserted on the production node)
    fn signature(self) -> (&'static str, &'static str, bool) {
        match self {
            TargetProperty::Technique => ("P32", "E55", true),
            TargetProperty::Material => ("P45", "E57", false),
            TargetProperty::Place => ("P7", "E53", true),
            TargetProperty::Time => ("P4", "E52", true),
            TargetProperty::Depiction => ("P62", "T34", false),
        }
    }

    fn facets(self) -> &'static [Facet] {
        match self {
            TargetProperty::Technique => &[Facet::Technique, Facet::Weave],
            TargetProperty::Material => &[Facet::Material],
            TargetProperty::Depiction => &[Facet::Motif],
            TargetProperty::Place | TargetProperty::Time => &[],
        }
    }
}

impl FromStr for TargetProperty {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "technique" => TargetProperty::Technique,
            "material" => TargetProperty::Material,
            "place" => TargetProperty::Place,
            "time" => TargetProperty::Time,
            "depiction" => TargetProperty::Depiction,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Image(Iri),
    Text(String),
}

impl Source {
    pub fn kind(&self) -> &'static str {
        match self {
            Source::Image(_) => "image",
            Source::Text(_) => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub institution: String,
    pub record_id: String,
    pub target: TargetProperty,
    /// A label, or an absolute IRI naming a concept.
    pub value: String,
    pub confidence: f64,
    pub source: Source,
    pub agent: String,
    pub agent_doc: Option<Iri>,
    pub at_time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PredictionError {
    #[error("confidence {0} is outside [0, 1]")]
    ConfidenceOutOfRange(String),
    #[error("unknown target property {0:?}")]
    UnknownTargetProperty(String),
    #[error("malformed timestamp {0:?}")]
    MalformedTimestamp(String),
    #[error("depiction predictions need an image source")]
    DepictionRequiresImage,
    #[error("malformed prediction: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("prediction #{index}: {error}")]
pub struct RejectedPrediction {
    pub index: usize,
    pub error: PredictionError,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedPredictions {
    pub predictions: Vec<Prediction>,
    pub rejected: Vec<RejectedPrediction>,
}

/// Parses a prediction document. Invalid entries are collected, not fatal;
/// only a document that is not a JSON array fails as a whole.
pub fn parse_predictions(doc: &str) -> Result<ParsedPredictions, PredictionError> {
    let value: Value = serde_json::from_str(doc).map_err(|e| PredictionError::Malformed(e.to_string()))?;
    let Value::Array(entries) = value else {
        return Err(PredictionError::Malformed(
            "prediction document must be a JSON array".into(),
        ));
    };
    let mut out = ParsedPredictions::default();
    for (index, entry) in entries.iter().enumerate() {
        match parse_prediction(entry) {
            Ok(p) => out.predictions.push(p),
            Err(error) => out.rejected.push(RejectedPrediction { index, error }),
        }
    }
    Ok(out)
}

pub fn parse_prediction(entry: &Value) -> Result<Prediction, PredictionError> {
    let malformed = |m: &str| PredictionError::Malformed(m.to_string());
    let obj = entry.as_object().ok_or_else(|| malformed("entry is not an object"))?;
    let text = |key: &str| -> Result<String, PredictionError> {
        let s = obj
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| PredictionError::Malformed(format!("\"{key}\" is missing or not a string")))?;
        let s = crate::text::normalize_value(s);
        if s.is_empty() {
            return Err(PredictionError::Malformed(format!("\"{key}\" is empty")));
        }
        Ok(s)
    };

    let property = text("property")?;
    let target: TargetProperty = property
        .parse()
        .map_err(|_| PredictionError::UnknownTargetProperty(property.clone()))?;

    let confidence = match obj.get("confidence") {
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| malformed("confidence is not a finite number"))?,
        _ => return Err(malformed("\"confidence\" is missing or not a number")),
    };
    if !(0.0..=1.0).contains(&confidence) {
        return Err(PredictionError::ConfidenceOutOfRange(confidence.to_string()));
    }

    let at = text("at")?;
    let at_time = parse_timestamp(&at).ok_or(PredictionError::MalformedTimestamp(at))?;

    let source = obj
        .get("source")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("\"source\" is missing"))?;
    let kind = source.get("kind").and_then(Value::as_str).unwrap_or_default();
    let reference = source
        .get("ref")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("source.ref is missing or not a string"))?;
    let source = match kind {
        "image" => {
            Source::Image(Iri::new(reference).map_err(|e| PredictionError::Malformed(format!("source.ref: {e}")))?)
        }
        "text" => Source::Text(crate::text::normalize_value(reference)),
        other => return Err(PredictionError::Malformed(format!("unknown source kind {other:?}"))),
    };
    if target == TargetProperty::Depiction && !matches!(source, Source::Image(_)) {
        return Err(PredictionError::DepictionRequiresImage);
    }

    let agent_doc = match obj.get("agent_doc") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => {
            Some(Iri::new(s.as_str()).map_err(|e| PredictionError::Malformed(format!("agent_doc: {e}")))?)
        }
        Some(_) => return Err(malformed("agent_doc must be a string or null")),
    };

    Ok(Prediction {
        institution: text("institution")?,
        record_id: text("record_id")?,
        target,
        value: text("value")?,
        confidence,
        source,
        agent: text("agent")?,
        agent_doc,
        at_time,
    })
}

/// RFC 3339 timestamps; offsets are converted to UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.with_timezone(&Utc))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Lexical form of a confidence: four decimals, trailing zeros dropped
/// (0.71 → "0.71", 1 → "1.0").
pub fn format_confidence(c: f64) -> String {
    let s = format!("{c:.prec$}", prec = CONFIDENCE_DECIMALS);
    let trimmed = s.trim_end_matches('0');
    if trimmed.ends_with('.') {
        format!("{trimmed}0")
    } else {
        trimmed.to_string()
    }
}

pub fn parse_confidence(s: &str) -> Option<f64> {
    let c: f64 = s.parse().ok()?;
    (0.0..=1.0).contains(&c).then_some(c)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotateError {
    #[error("record {institution}/{record_id} not found in graph")]
    RecordNotFound { institution: String, record_id: String },
    #[error(transparent)]
    Context(#[from] MintContextError),
}

/// The nodes of one annotation and the triples to add.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvSubgraph {
    pub activity: Iri,
    pub statement: Iri,
    pub dimension: Iri,
    pub agent: Iri,
    /// The asserted domain triple.
    pub asserted: Triple,
    pub triples: Graph,
}

struct Builder<'a> {
    ont: &'a Ontology,
    base: &'a str,
    out: Graph,
}

impl Builder<'_> {
    fn add(&mut self, s: &Iri, p: &str, o: impl Into<Term>) {
        let predicate = match p {
            "a" => Iri::new_unchecked(RDF_TYPE),
            _ => self.ont.property_iri(p).clone(),
        };
        self.out.insert(Triple::new(s.clone(), predicate, o));
    }

    fn typed(&mut self, s: &Iri, class: &str) {
        let class = self.ont.class_iri(class).clone();
        self.add(s, "a", class);
    }

    fn term(&mut self, class: &str, text: &str) -> Iri {
        let iri = vocab_iri(self.base, class, text);
        self.typed(&iri, class);
        self.add(&iri, "rdfs:label", Literal::simple(text));
        iri
    }
}

/// Builds the provenance fragment for one prediction. The object node of
/// the record must already be typed in `g`. `ctx` carries the record's
/// identity; see [`context_for`].
pub fn annotate(g: &Graph, p: &Prediction, ctx: &MintContext, th: &Thesaurus) -> Result<ProvSubgraph, AnnotateError> {
    annotate_with(g, p, ctx, th, Ontology::builtin())
}

pub fn context_for(base_namespace: &str, p: &Prediction) -> Result<MintContext, MintContextError> {
    MintContext::new(base_namespace, p.institution.as_str(), p.record_id.as_str())
}

pub fn annotate_with(
    g: &Graph,
    p: &Prediction,
    ctx: &MintContext,
    th: &Thesaurus,
    ont: &Ontology,
) -> Result<ProvSubgraph, AnnotateError> {
    let object = mint_iri(ctx, OBJECT_ROLE, "");
    if g.types_of(&object).next().is_none() || ctx.institution() != p.institution || ctx.record_id() != p.record_id {
        return Err(AnnotateError::RecordNotFound {
            institution: p.institution.clone(),
            record_id: p.record_id.clone(),
        });
    }
    let mut b = Builder {
        ont,
        base: ctx.base_namespace(),
        out: Graph::new(),
    };

    // Domain triple.
    let (property, class, on_production) = p.target.signature();
    let subject = if on_production {
        let production = mint_iri(ctx, "production", "");
        b.typed(&production, "E12");
        b.add(&production, "P108", object.clone());
        production
    } else {
        object.clone()
    };
    let value = resolve_value(&mut b, p, class, th);
    let predicate = ont.property_iri(property).clone();
    let asserted = Triple::new(subject.clone(), predicate.clone(), value.clone());
    b.out.insert(asserted.clone());

    // Agent.
    let agent = vocab_iri(b.base, "prov:Agent", &p.agent);
    b.typed(&agent, "prov:Agent");
    b.add(&agent, "rdfs:label", Literal::simple(p.agent.as_str()));
    let software = b.term("E55", "software agent");
    b.add(&agent, "P2", software);
    if let Some(doc) = &p.agent_doc {
        b.typed(doc, "E31");
        b.add(doc, "P70", agent.clone());
    }

    // Activity: one per (record, source kind, agent, time).
    let at = format_timestamp(&p.at_time);
    let activity_key = [p.source.kind(), p.agent.as_str(), at.as_str()].join("\u{1f}");
    let activity = mint_iri(ctx, "activity", &activity_key);
    b.typed(&activity, "prov:Activity");
    let kind = b.term("E55", &format!("{} analysis", p.source.kind()));
    b.add(&activity, "P2", kind);
    b.add(
        &activity,
        "prov:atTime",
        Literal::typed(at.as_str(), Iri::new_unchecked(XSD_DATE_TIME)),
    );
    b.add(&activity, "prov:wasAssociatedWith", agent.clone());
    let input = match &p.source {
        Source::Image(image) => {
            b.typed(image, "E38");
            image.clone()
        }
        Source::Text(text) => {
            let node = mint_iri(ctx, "text_input", text);
            b.typed(&node, "E62");
            b.add(&node, "rdfs:label", Literal::simple(text.as_str()));
            node
        }
    };
    b.add(&activity, "prov:used", input);

    // Reified statement with its confidence.
    let confidence = format_confidence(p.confidence);
    let statement_key = [
        activity_key.as_str(),
        p.target.as_str(),
        value.as_str(),
        confidence.as_str(),
    ]
    .join("\u{1f}");
    let statement = mint_iri(ctx, "statement", &statement_key);
    let dimension = mint_iri(ctx, "dimension", &statement_key);
    b.typed(&statement, "rdf:Statement");
    b.add(&statement, "rdf:subject", subject);
    b.add(&statement, "rdf:predicate", predicate);
    b.add(&statement, "rdf:object", value);
    b.add(&statement, "prov:wasGeneratedBy", activity.clone());
    b.add(&statement, "P43", dimension.clone());
    b.typed(&dimension, "E54");
    b.add(
        &dimension,
        "P90",
        Literal::typed(confidence, Iri::new_unchecked(XSD_DECIMAL)),
    );
    let score = b.term("E55", "confidence score");
    b.add(&dimension, "P2", score);

    Ok(ProvSubgraph {
        activity,
        statement,
        dimension,
        agent,
        asserted,
        triples: b.out,
    })
}

/// Concept IRI given directly, else a thesaurus match, else a vocabulary term.
fn resolve_value(b: &mut Builder<'_>, p: &Prediction, class: &str, th: &Thesaurus) -> Iri {
    let concept = if p.value.starts_with("http://") || p.value.starts_with("https://") {
        Iri::new(p.value.as_str()).ok()
    } else {
        match match_concept_in(th, &p.value, p.target.facets(), None) {
            MatchResult::Matched(iri) => Some(iri),
            other => {
                log::debug!(
                    "prediction value {:?} not reconciled ({other:?}); minting a term",
                    p.value
                );
                None
            }
        }
    };
    match concept {
        Some(iri) => {
            b.typed(&iri, class);
            iri
        }
        None => b.term(class, &p.value),
    }
}

/// Annotates every prediction into a copy of `g`. Failures are returned per
/// prediction index; the others still apply.
pub fn annotate_all(
    g: &Graph,
    predictions: &[Prediction],
    base_namespace: &str,
    th: &Thesaurus,
    ont: &Ontology,
) -> (Graph, Vec<ProvSubgraph>, Vec<(usize, AnnotateError)>) {
    let mut out = g.clone();
    let mut fragments = Vec::new();
    let mut errors = Vec::new();
    for (i, p) in predictions.iter().enumerate() {
        let result = context_for(base_namespace, p)
            .map_err(AnnotateError::from)
            .and_then(|ctx| annotate_with(g, p, &ctx, th, ont));
        match result {
            Ok(fragment) => {
                out.extend_from(&fragment.triples);
                fragments.push(fragment);
            }
            Err(e) => errors.push((i, e)),
        }
    }
    (out, fragments, errors)
}

/// IRIs of `rdf:Statement`, `rdf:subject` etc., for queries over predictions.
pub fn rdf_term(local: &str) -> Iri {
    Iri::new_unchecked(format!("{RDF}{local}"))
}

impl fmt::Display for TargetProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(property: &str, value: &str, confidence: f64, kind: &str) -> String {
        format!(
            r#"{{"institution": "versailles", "record_id": "r1", "property": "{property}", "value": "{value}",
                "confidence": {confidence}, "source": {{"kind": "{kind}", "ref": "http://example.org/img/1.jpg"}},
                "agent": "image-technique-cnn", "agent_doc": null, "at": "2021-03-01T10:00:00Z"}}"#
        )
    }

    #[test]
    fn parses_valid_predictions() {
        let doc = format!(
            "[{}, {}, {}]",
            entry("technique", "Damask", 0.71, "image"),
            entry("depiction", "Floral motif", 0.51, "image"),
            entry("depiction", "Vegetal motif", 0.57, "image")
        );
        let parsed = parse_predictions(&doc).unwrap();
        assert!(parsed.rejected.is_empty());
        assert_eq!(parsed.predictions.len(), 3);
        assert_eq!(parsed.predictions[0].target, TargetProperty::Technique);
        assert_eq!(parsed.predictions[0].confidence, 0.71);
    }

    #[test]
    fn collects_rejects_per_entry() {
        let doc = format!(
            "[{}, {}, {}, {}, {}]",
            entry("technique", "Damask", 1.7, "image"),
            entry("colour", "red", 0.5, "image"),
            entry("technique", "Damask", 0.5, "image").replace("2021-03-01T10:00:00Z", "yesterday"),
            entry("depiction", "Floral motif", 0.5, "text"),
            entry("material", "silk", 0.9, "text"),
        );
        let parsed = parse_predictions(&doc).unwrap();
        let errors: Vec<_> = parsed.rejected.iter().map(|r| (r.index, r.error.clone())).collect();
        assert_eq!(
            errors,
            vec![
                (0, PredictionError::ConfidenceOutOfRange("1.7".into())),
                (1, PredictionError::UnknownTargetProperty("colour".into())),
                (2, PredictionError::MalformedTimestamp("yesterday".into())),
                (3, PredictionError::DepictionRequiresImage),
            ]
        );
        assert_eq!(parsed.predictions.len(), 1);
        assert!(parse_predictions("{}").is_err());
    }

    #[test]
    fn confidence_formatting() {
        assert_eq!(format_confidence(0.71), "0.71");
        assert_eq!(format_confidence(0.5), "0.5");
        assert_eq!(format_confidence(1.0), "1.0");
        assert_eq!(format_confidence(0.0), "0.0");
        assert_eq!(format_confidence(0.12345), "0.1235");
    }

    #[test]
    fn timestamps_normalize_to_utc() {
        let t = parse_timestamp("2021-03-01T12:00:00+02:00").unwrap();
        assert_eq!(format_timestamp(&t), "2021-03-01T10:00:00Z");
        assert!(parse_timestamp("2021-03-01").is_none());
    }

    proptest! {
        #[test]
        fn confidence_round_trips(k in 0u32..=10_000) {
            let c = f64::from(k) / 10_000.0;
            prop_assert_eq!(parse_confidence(&format_confidence(c)), Some(c));
        }
    }
}
