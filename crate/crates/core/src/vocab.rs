//! Well-known IRIs.

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const PROV: &str = "http://www.w3.org/ns/prov#";
pub const CRM: &str = "http://www.cidoc-crm.org/cidoc-crm/";
pub const CRMSCI: &str = "http://www.ics.forth.gr/isl/CRMsci/";
pub const SILKNOW: &str = "http://data.silknow.org/ontology/";

/// Namespace of terms defined by this toolkit.
pub const TOOLKIT: &str = "https://w3id.org/heritage-forge/ns#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

/// Links a thesaurus concept to the vocabulary node it replaced.
pub const RECONCILED_FROM: &str = "https://w3id.org/heritage-forge/ns#reconciledFrom";

/// Default base namespace for minted IRIs.
pub const DEFAULT_BASE: &str = "http://data.silknow.org/";

/// Hash used for minting, recorded in export headers.
pub const MINT_HASH: &str = "sha256";

/// Prefixes used for Turtle output and query convenience.
pub fn default_prefixes() -> Vec<(&'static str, &'static str)> {
    vec![
        ("crm", CRM),
        ("crmsci", CRMSCI),
        ("silknow", SILKNOW),
        ("prov", PROV),
        ("rdf", RDF),
        ("rdfs", RDFS),
        ("xsd", XSD),
        ("hf", TOOLKIT),
    ]
}
