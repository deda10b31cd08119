//! Evidence Unit construction and evaluation.
//!
//! Layout-parser output is ingested into [`model::LayoutElement`]s, given a
//! canonical role ([`roles`]), grouped into evidence units ([`builder`]),
//! optionally validated against the anchoring and type-consistency
//! invariants ([`decision`]), compared across parser tracks ([`footprint`])
//! and scored for retrieval ([`eval`]).

pub mod builder;
pub mod decision;
pub mod embed;
pub mod error;
pub mod eval;
pub mod footprint;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod roles;
pub mod synthetic;

pub use error::{Error, Result};
