//! On-disk formats of every pipeline artifact.

pub mod checkpoint;
pub mod dataset;
pub mod explanations;
pub mod formulas;
pub mod weights;

/// Version written into every versioned artifact; readers reject others.
pub const FORMAT_VERSION: u32 = 1;
