//! File formats, persistence, synthetic corpora and command plumbing for
//! the retrack motion-retrieval tracker. The algorithms live in
//! `retrack-core`; this crate owns everything that touches a filesystem.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod synth;
