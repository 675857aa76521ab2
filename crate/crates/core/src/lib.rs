//! Converts museum catalog records into a validated, provenance-annotated
//! CIDOC CRM knowledge graph.
//!
//! The pipeline is records → mapping → enrichment → provenance, with every
//! stage writing into an in-memory [`store::Graph`] that can be validated
//! against an [`ontology::Ontology`], queried and serialized.

pub mod enrich;
pub mod mapping;
pub mod ontology;
pub mod provenance;
pub mod records;
pub mod store;
pub mod text;
pub mod vocab;
