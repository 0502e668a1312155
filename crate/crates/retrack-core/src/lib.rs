//! Search-and-retrieval object tracking over annotated video libraries.
//!
//! The crate turns dense optical flow into quantized binary *motion
//! documents*, indexes overlapping document *fragments* from an annotated
//! library, and tracks objects in new videos by retrieving motion-similar
//! fragments, transferring their bounding-box annotations, warping the
//! boxes against the query flow and linking the survivors into tracks.
//!
//! Everything here is pure computation over in-memory inputs; file formats,
//! persistence and the command-line driver live in the companion `retrack`
//! crate. The crate is `no_std`-compatible (with `alloc`) when built without
//! the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod assoc;
pub mod document;
pub mod error;
pub mod flow;
pub mod frame;
pub mod geometry;
pub mod index;
pub mod metrics;
pub mod pipeline;
pub mod retrieval;
pub mod transfer;

mod math;

pub use error::{Error, Result};
