//! Catalog records in the intermediate label/value JSON format.
//!
//! ```json
//! {"institution": "versailles", "id": "…",
//!  "fields": [{"label": "title", "value": "lé de tenture"}]}
//! ```
//!
//! A multi-record file is a JSON array of such documents.

use std::fmt;

use serde_json::{json, Map, Value};

pub use crate::text::normalize_value;

/// One catalog field. Duplicate labels are legal and kept in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub label: String,
    pub value: String,
}

/// One catalog notice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub institution: String,
    pub record_id: String,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record document: {0}")]
    MalformedDocument(String),
    #[error("missing identity: {0}")]
    MissingIdentity(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordWarning {
    /// A field whose value normalized to the empty string was dropped.
    EmptyValueDropped { index: usize, label: String },
    /// The record has no usable fields.
    NoFields,
}

impl fmt::Display for RecordWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordWarning::EmptyValueDropped { index, label } => {
                write!(f, "field #{index} ({label:?}) has an empty value and was dropped")
            }
            RecordWarning::NoFields => f.write_str("record has no fields"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRecord {
    pub record: Record,
    pub warnings: Vec<RecordWarning>,
}

/// Parses one record document.
///
/// The institution comes from the document's `institution` key, else from
/// `default_institution`. The record id comes from `id`. Neither is guessed.
pub fn parse_record(doc: &Value, default_institution: Option<&str>) -> Result<ParsedRecord, RecordError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| RecordError::MalformedDocument("record document must be a JSON object".into()))?;

    let institution = match optional_string(obj, "institution")? {
        Some(i) => Some(i),
        None => default_institution.map(normalize_value).filter(|s| !s.is_empty()),
    }
    .ok_or_else(|| RecordError::MissingIdentity("no institution in document and no default given".into()))?;
    let record_id =
        optional_string(obj, "id")?.ok_or_else(|| RecordError::MissingIdentity("document has no \"id\"".into()))?;

    let raw_fields = obj
        .get("fields")
        .and_then(Value::as_array)
        .ok_or_else(|| RecordError::MalformedDocument("missing \"fields\" array".into()))?;

    let mut fields = Vec::with_capacity(raw_fields.len());
    let mut warnings = Vec::new();
    for (index, raw) in raw_fields.iter().enumerate() {
        let entry = raw
            .as_object()
            .ok_or_else(|| RecordError::MalformedDocument(format!("fields[{index}] is not an object")))?;
        let text = |key: &str| -> Result<&str, RecordError> {
            entry.get(key).and_then(Value::as_str).ok_or_else(|| {
                RecordError::MalformedDocument(format!("fields[{index}].{key} is missing or not a string"))
            })
        };
        let label = normalize_value(text("label")?);
        if label.is_empty() {
            return Err(RecordError::MalformedDocument(format!(
                "fields[{index}].label is empty"
            )));
        }
        let value = normalize_value(text("value")?);
        if value.is_empty() {
            warnings.push(RecordWarning::EmptyValueDropped { index, label });
            continue;
        }
        fields.push(Field { label, value });
    }
    if fields.is_empty() {
        warnings.push(RecordWarning::NoFields);
    }

    Ok(ParsedRecord {
        record: Record {
            institution,
            record_id,
            fields,
        },
        warnings,
    })
}

/// A string-valued identity key; absent, null or blank counts as missing.
fn optional_string(obj: &Map<String, Value>, key: &str) -> Result<Option<String>, RecordError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(normalize_value(s)).filter(|s| !s.is_empty())),
        Some(_) => Err(RecordError::MalformedDocument(format!("\"{key}\" must be a string"))),
    }
}

/// A record-level failure inside a multi-record file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("record #{index}: {error}")]
pub struct IndexedRecordError {
    pub index: usize,
    pub error: RecordError,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordsFileError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} record(s) rejected; first: {}", .0.len(), .0[0])]
    Records(Vec<IndexedRecordError>),
}

/// Parses a file holding one record document or an array of them.
/// All record-level errors are collected.
pub fn parse_records(text: &str, default_institution: Option<&str>) -> Result<Vec<ParsedRecord>, RecordsFileError> {
    let value: Value = serde_json::from_str(text).map_err(|e| RecordsFileError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let docs: Vec<&Value> = match &value {
        Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    let mut records = Vec::with_capacity(docs.len());
    let mut errors = Vec::new();
    for (index, doc) in docs.into_iter().enumerate() {
        match parse_record(doc, default_institution) {
            Ok(r) => records.push(r),
            Err(error) => errors.push(IndexedRecordError { index, error }),
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(RecordsFileError::Records(errors))
    }
}

impl Record {
    /// The record document this record parses from.
    pub fn to_document(&self) -> Value {
        json!({
            "institution": self.institution,
            "id": self.record_id,
            "fields": self.fields.iter().map(|f| json!({"label": f.label, "value": f.value})).collect::<Vec<_>>(),
        })
    }
}
