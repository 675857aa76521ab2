//! Deterministic IRI minting.

use sha2::{Digest, Sha256};

use crate::records::Record;
use crate::store::Iri;
use crate::text::{encode_segment, slug};

/// Identity of the record whose nodes are being minted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MintContext {
    base_namespace: String,
    institution: String,
    record_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MintContextError {
    #[error("base namespace {0:?} must be an absolute IRI ending in '/' or '#'")]
    BadBase(String),
    #[error("institution and record id must be non-empty")]
    EmptyIdentity,
}

impl MintContext {
    pub fn new(
        base_namespace: impl Into<String>,
        institution: impl Into<String>,
        record_id: impl Into<String>,
    ) -> Result<Self, MintContextError> {
        let base_namespace = base_namespace.into();
        check_base(&base_namespace)?;
        let (institution, record_id) = (institution.into(), record_id.into());
        if institution.is_empty() || record_id.is_empty() {
            return Err(MintContextError::EmptyIdentity);
        }
        Ok(MintContext {
            base_namespace,
            institution,
            record_id,
        })
    }

    pub fn for_record(base_namespace: &str, record: &Record) -> Result<Self, MintContextError> {
        Self::new(base_namespace, record.institution.as_str(), record.record_id.as_str())
    }

    pub fn base_namespace(&self) -> &str {
        &self.base_namespace
    }

    pub fn institution(&self) -> &str {
        &self.institution
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }
}

pub fn check_base(base: &str) -> Result<(), MintContextError> {
    if Iri::new(base).is_ok() && (base.ends_with('/') || base.ends_with('#')) {
        Ok(())
    } else {
        Err(MintContextError::BadBase(base.to_string()))
    }
}

/// `base + role + "/" + hex(sha256(institution ␟ record_id ␟ role ␟ discriminator))`
/// where ␟ is U+001F.
pub fn mint_iri(ctx: &MintContext, role: &str, discriminator: &str) -> Iri {
    assert!(!role.is_empty(), "mint role must be non-empty");
    let mut hasher = Sha256::new();
    for (i, part) in [ctx.institution.as_str(), &ctx.record_id, role, discriminator]
        .iter()
        .enumerate()
    {
        if i > 0 {
            hasher.update([0x1f]);
        }
        hasher.update(part.as_bytes());
    }
    let digest = hex::encode(hasher.finalize());
    Iri::new_unchecked(format!("{}{}/{digest}", ctx.base_namespace, encode_segment(role)))
}

/// `base + "vocab/" + class id + "/" + slug(text)`. Equal terms from
/// different records and institutions share one IRI.
pub fn vocab_iri(base_namespace: &str, class_id: &str, text: &str) -> Iri {
    Iri::new_unchecked(format!(
        "{base_namespace}vocab/{}/{}",
        encode_segment(class_id),
        slug(text)
    ))
}
