use alloc::vec::Vec;

use super::matrix::Matrix;
use super::tape::{Tape, Var};
use crate::Result;

/// Outcome of comparing reverse-mode gradients against central finite
/// differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Relative error `|a − n| / max(|a|, |n|, floor)`; the floor keeps
/// vanishing gradients from inflating the ratio.
pub fn relative_error(a: f64, n: f64) -> f64 {
    let denom = a.abs().max(n.abs()).max(1e-6);
    (a - n).abs() / denom
}

/// Checks `f` at `x`. `f` records a scalar computation of its input leaf.
pub fn grad_check<F>(f: F, x: &Matrix, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let input = tape.leaf(x.clone());
    let out = f(&mut tape, input)?;
    let grads = tape.backward(out)?;
    let analytic = match grads.wrt(input) {
        Some(g) => g.data().to_vec(),
        None => alloc::vec![0.0; x.data().len()],
    };
    let eval = |m: Matrix| -> Result<f64> {
        let mut t = Tape::new();
        let i = t.leaf(m);
        let o = f(&mut t, i)?;
        Ok(t.value(o).item())
    };
    let mut numeric = Vec::with_capacity(analytic.len());
    for k in 0..x.data().len() {
        let mut plus = x.clone();
        plus.data_mut()[k] += FD_STEP;
        let mut minus = x.clone();
        minus.data_mut()[k] -= FD_STEP;
        numeric.push((eval(plus)? - eval(minus)?) / (2.0 * FD_STEP));
    }
    let max_rel_error = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: max_rel_error <= tol,
        analytic,
        numeric,
        max_rel_error,
    })
}
