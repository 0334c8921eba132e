//! Researcher-mobility indicators derived from co-affiliation data in
//! bibliographic records.
//!
//! The pipeline goes: line-delimited publication records -> per-author
//! affiliation histories -> year-by-year mobility events -> co-affiliation
//! networks, origin/destination flow matrices, and citation-impact
//! indicators stratified by mobility class.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`corpus`] — parsing, alias normalization, author histories,
//!   eligibility filtering, field-year citation baselines.
//! * [`mobility`] — mobility-event classification and return detection.
//! * [`coaffil`] — co-affiliation graphs from each researcher's two most
//!   common affiliations.
//! * [`graphmetrics`] — closeness and betweenness centrality, ranked
//!   centrality tables, regional subgraphs.
//! * [`flows`] — directed country-to-country flow matrices and
//!   capacity-normalized sending/receiving shares.
//! * [`impact`] — normalized citation scores, MNCS, top-10% shares by
//!   mobility class.
//! * [`synth`] — deterministic synthetic corpora with planted ground truth,
//!   used as the pipeline's oracle.
//! * [`graphio`] — edge-list, GraphML, and Pajek serialization.

pub mod coaffil;
pub mod corpus;
mod error;
pub mod flows;
pub mod graphio;
pub mod graphmetrics;
pub mod impact;
pub mod mobility;
pub mod synth;

mod entity;

pub use entity::{EntityKey, Level};
pub use error::{CoreError, Result};

/// Calendar year of a publication.
pub type Year = i32;
