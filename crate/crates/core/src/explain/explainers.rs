use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::EdgeWeights;
use crate::autodiff::{AdamConfig, AdamState, Matrix, ParamStore, Tape, Var};
use crate::gnn::GnnClassifier;
use crate::rng::{self, stream};
use crate::{Error, Graph, Result};

/// A binary classifier whose single logit can be evaluated with each edge
/// scaled by a differentiable weight.
pub trait EdgeModel {
    /// `edge_weights` is `|E| × 1`, aligned with `graph.edges()`.
    fn weighted_logit(&self, tape: &mut Tape, graph: &Graph, edge_weights: Var) -> Result<Var>;
}

impl EdgeModel for GnnClassifier {
    fn weighted_logit(&self, tape: &mut Tape, graph: &Graph, edge_weights: Var) -> Result<Var> {
        self.forward_weighted(tape, graph, edge_weights)
    }
}

fn unit_logit<M: EdgeModel + ?Sized>(model: &M, graph: &Graph) -> Result<f64> {
    let mut tape = Tape::new();
    let w = tape.leaf(Matrix::filled(graph.edge_count(), 1, 1.0));
    let z = model.weighted_logit(&mut tape, graph, w)?;
    Ok(tape.value(z).item())
}

/// `|∂ logit / ∂ w_e|` at unit weights, divided by its maximum. With one
/// logit the predicted-class score is `±logit`, so its sign drops out. An
/// undirected edge gets the sum of both directions' partials.
pub fn explain_saliency<M: EdgeModel + ?Sized>(model: &M, graph: &Graph, graph_id: usize) -> Result<EdgeWeights> {
    if graph.edge_count() == 0 {
        return EdgeWeights::new(graph_id, graph, Vec::new());
    }
    let mut tape = Tape::new();
    let w = tape.leaf(Matrix::filled(graph.edge_count(), 1, 1.0));
    let z = model.weighted_logit(&mut tape, graph, w)?;
    let grads = tape.backward(z)?;
    let mut sal: Vec<f64> = match grads.wrt(w) {
        Some(g) => g.data().iter().map(|x| x.abs()).collect(),
        None => alloc::vec![0.0; graph.edge_count()],
    };
    let max = sal.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        sal.iter_mut().for_each(|x| *x = (*x / max).min(1.0));
    }
    EdgeWeights::new(graph_id, graph, sal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgeMaskConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub sparsity_coef: f64,
    /// Half-width of the uniform noise around 0 used to start the mask logits.
    pub init_spread: f64,
    pub seed: u64,
}

impl Default for EdgeMaskConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            learning_rate: 0.05,
            sparsity_coef: 0.05,
            init_spread: 0.1,
            seed: 0,
        }
    }
}

impl EdgeMaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.sparsity_coef >= 0.0) || !(self.init_spread >= 0.0) {
            return Err(Error::Config(format!("invalid edge_mask settings {self:?}")));
        }
        Ok(())
    }
}

/// Learns mask logits `m` that keep the model's prediction while switching
/// edges off: Adam on `−log p_pred(σ(m)) + coef · Σ σ(m)`. Returns `σ(m)`.
pub fn explain_edge_mask<M: EdgeModel + ?Sized>(
    model: &M,
    graph: &Graph,
    graph_id: usize,
    cfg: &EdgeMaskConfig,
) -> Result<EdgeWeights> {
    cfg.validate()?;
    let e = graph.edge_count();
    if e == 0 {
        return EdgeWeights::new(graph_id, graph, Vec::new());
    }
    // the sign that turns the logit into the predicted-class score
    let sign = if unit_logit(model, graph)? > 0.0 { 1.0 } else { -1.0 };
    let mut r = rng::rng(cfg.seed, stream::EDGE_MASK, graph_id as u64);
    let init: Vec<f64> = (0..e)
        .map(|_| if cfg.init_spread > 0.0 { r.gen_range(-cfg.init_spread..cfg.init_spread) } else { 0.0 })
        .collect();
    let mut store = ParamStore::new();
    let mask = store.add("mask", Matrix::from_vec(e, 1, init)?);
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.learning_rate), &store, alloc::vec![mask]);
    for _ in 0..cfg.steps {
        let mut tape = Tape::new();
        let m = tape.param(&store, mask);
        let w = tape.sigmoid(m);
        let z = model.weighted_logit(&mut tape, graph, w)?;
        let score = tape.scale(z, sign);
        let p = tape.sigmoid(score);
        let logp = tape.log(p);
        let fit = tape.scale(logp, -1.0);
        let size = tape.sum_all(w);
        let size = tape.scale(size, cfg.sparsity_coef);
        let loss = tape.add(fit, size)?;
        let grads = tape.backward(loss)?;
        // the tape also holds the model's parameters, so only the mask
        // gradient is copied over
        let g = grads.wrt(m).cloned().unwrap_or_else(|| Matrix::zeros(e, 1));
        store.get_mut(mask).grad = g;
        adam.step(&mut store);
    }
    let weights = store.get(mask).value.data().iter().map(|&x| crate::math::sigmoid(x)).collect();
    EdgeWeights::new(graph_id, graph, weights)
}
