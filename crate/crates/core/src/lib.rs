//! Energy, carbon, and efficiency analytics for LLM inference workloads.
//!
//! The toolkit estimates per-query inference energy from token counts and
//! model/provider metadata, accounts for the cost and savings of prompt
//! compression, converts energy to carbon under regional intensity factors,
//! aggregates real trial logs, scores models on a quality-gated Green AI
//! scale, computes quality-energy Pareto frontiers, and selects
//! cost/energy/quality-optimal routing configurations.
//!
//! Everything is a pure function of its inputs plus immutable registries,
//! so all operations are safe to call concurrently.

pub mod carbon;
pub mod compression;
pub mod config;
pub mod drift;
pub mod energy;
mod error;
pub mod optimize;
pub mod provider;
pub mod report;
pub mod scoring;
pub mod trial;

pub use error::{Error, Result};
