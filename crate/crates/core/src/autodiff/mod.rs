//! Minimal reverse-mode automatic differentiation over dense `f64`
//! matrices.
//!
//! A [`Tape`] records one forward computation; [`Tape::backward`] walks it
//! in reverse and returns [`Gradients`] for every recorded value.
//! Trainable values live in a [`ParamStore`] and are copied onto the tape
//! with [`Tape::param`], so a fresh tape can be built for every batch.

mod adam;
mod gradcheck;
mod matrix;
mod params;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, FD_STEP};
pub use matrix::{Matrix, SparseMatrix};
pub use params::{ParamId, ParamStore, Tensor};
pub use tape::{
    focal_value, one_hot_rows, softmax_rows, EdgeIndex, Gradients, Tape, Var, PROB_CLAMP,
};

#[cfg(test)]
mod tests;
