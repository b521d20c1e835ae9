//! Allocation-only core of the `glogex` toolkit.
//!
//! Everything in here is a pure function of its inputs and a seed: graph
//! primitives, a small tape-based reverse-mode autodiff engine, the graph
//! classifier that gets explained, the BAMultiShapes generator, local edge
//! explainers, the prototype/logic global explainer and its metrics.
//! File formats, parallelism and the command-line front end live in the
//! `glogex` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod autodiff;
pub mod datasets;
mod error;
pub mod explain;
pub mod glg;
pub mod gnn;
pub mod graph;
pub mod math;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{Graph, LabeledGraph, Split};
