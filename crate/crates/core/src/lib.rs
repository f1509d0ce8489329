//! Layer-wise separability analysis of transformer embeddings.
//!
//! The crate reads per-layer embedding bundles (see [`bundle`]), trains linear
//! probes on a lemma-disjoint split ([`probes`]), measures cluster separability
//! with the Generalized Discrimination Value ([`gdv`]) and correlates the
//! resulting layer series with Spearman's rank correlation ([`stats`]).
//! [`pipeline`] ties these together and emits CSV/JSON reports and SVG charts.

pub mod bundle;
pub mod gdv;
pub mod pipeline;
pub mod probes;
pub mod stats;
pub mod textprep;
mod types;

pub use types::{Level, Split, VerbClass};
