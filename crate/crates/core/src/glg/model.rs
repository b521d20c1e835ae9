//! Explanation embedder, prototypes and the logic network, wired into one
//! differentiable model.

use alloc::format;
use alloc::rc::Rc;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::concepts::{self, project_tape};
use crate::autodiff::{Matrix, ParamId, ParamStore, Tape, Var};
use crate::datasets::Annotation;
use crate::gnn::{find, GinLayer, GraphBatch, Linear, ReadoutSpec, LEAKY_SLOPE};
use crate::rng::{self, stream};
use crate::{math, Error, Graph, Result, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlgArch {
    pub in_dim: usize,
    pub hidden: usize,
    pub embed_dim: usize,
    pub concepts: usize,
    pub projection_eps: f64,
}

impl Default for GlgArch {
    fn default() -> Self {
        Self {
            in_dim: 1,
            hidden: 20,
            embed_dim: 10,
            concepts: 6,
            projection_eps: concepts::DEFAULT_PROJECTION_EPS,
        }
    }
}

impl GlgArch {
    pub fn validate(&self) -> Result<()> {
        if self.concepts < 2 {
            return Err(Error::Config(format!("need at least 2 prototypes, got {}", self.concepts)));
        }
        if self.in_dim == 0 || self.hidden == 0 || self.embed_dim == 0 {
            return Err(Error::Config("embedder dimensions must be positive".into()));
        }
        if !(self.projection_eps > 0.0) {
            return Err(Error::Config("projection_eps must be positive".into()));
        }
        Ok(())
    }
}

/// Widths of the logic network after the concept input.
pub const ELEN_WIDTHS: [usize; 3] = [10, 5, 1];

/// Two GIN layers, the max/mean/sum readout and an affine map to the
/// embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    pub gin: [GinLayer; 2],
    pub out: Linear,
}

impl Embedder {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, batch: &GraphBatch) -> Result<Var> {
        let mut h = tape.leaf(batch.features.clone());
        for layer in &self.gin {
            h = layer.forward(tape, store, h, &batch.with_self_loops)?;
            h = tape.leaky_relu(h, LEAKY_SLOPE);
        }
        let pooled = ReadoutSpec::ConcatNonlinear.forward(tape, h, &batch.offsets)?;
        self.out.forward(tape, store, pooled)
    }
}

/// Feed-forward classifier over concept vectors with leaky ReLUs between
/// layers and a sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct Elen {
    pub layers: [Linear; 3],
}

impl Elen {
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, c: Var) -> Result<Var> {
        let mut h = c;
        for (k, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, store, h)?;
            if k + 1 < self.layers.len() {
                h = tape.leaky_relu(h, LEAKY_SLOPE);
            }
        }
        Ok(tape.sigmoid(h))
    }

    /// Probability of class 1 for each row of `c`.
    pub fn predict(&self, store: &ParamStore, c: &Matrix) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let x = tape.leaf(c.clone());
        let p = self.forward(&mut tape, store, x)?;
        Ok(tape.value(p).data().to_vec())
    }
}

/// One graph to explain: its local explanations and the explained model's
/// prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct GlgSample {
    pub graph_id: usize,
    pub split: Split,
    /// The explained model's predicted class, used as supervision.
    pub target: u8,
    /// Dataset label, used only for reporting.
    pub label: u8,
    pub explanations: Vec<Graph>,
    /// Motif label of each explanation; may be empty when unknown.
    pub annotations: Vec<Annotation>,
}

/// Explanations of several samples stacked for one forward pass.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub graphs: GraphBatch,
    /// Explanation rows of sample `i` are `owners[i]..owners[i + 1]`.
    pub owners: Rc<Vec<usize>>,
}

impl SampleBatch {
    pub fn new(samples: &[&GlgSample]) -> Result<Self> {
        let mut owners = Vec::with_capacity(samples.len() + 1);
        owners.push(0);
        let mut total = 0;
        for s in samples {
            if s.explanations.is_empty() {
                return Err(Error::Empty("sample without explanations in a batch"));
            }
            total += s.explanations.len();
            owners.push(total);
        }
        Ok(Self {
            graphs: GraphBatch::new(samples.iter().flat_map(|s| s.explanations.iter()))?,
            owners: Rc::new(owners),
        })
    }
}

/// Values recorded by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct Forward {
    pub embeddings: Var,
    /// Squared distances, explanations × prototypes.
    pub distances: Var,
    pub soft: Var,
    /// Concept vectors as fed to pooling: one-hot when discretizing.
    pub used: Var,
    pub pooled: Var,
    pub probability: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlgModel {
    pub arch: GlgArch,
    pub store: ParamStore,
    pub embedder: Embedder,
    pub prototypes: ParamId,
    pub elen: Elen,
}

impl GlgModel {
    pub fn new(arch: GlgArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut r = rng::rng(seed, stream::GLG_INIT, 0);
        let mut store = ParamStore::new();
        let h = arch.hidden;
        let embedder = Embedder {
            gin: [
                GinLayer::new(&mut store, "embed.gin0", arch.in_dim, h, &mut r),
                GinLayer::new(&mut store, "embed.gin1", h, h, &mut r),
            ],
            out: Linear::new(&mut store, "embed.out", ReadoutSpec::ConcatNonlinear.output_dim(h), arch.embed_dim, &mut r),
        };
        let protos: Vec<f64> = (0..arch.concepts * arch.embed_dim).map(|_| r.gen::<f64>()).collect();
        let prototypes = store.add("prototypes", Matrix::from_vec(arch.concepts, arch.embed_dim, protos)?);
        let [w1, w2, w3] = ELEN_WIDTHS;
        let elen = Elen {
            layers: [
                Linear::new(&mut store, "elen.0", arch.concepts, w1, &mut r),
                Linear::new(&mut store, "elen.1", w1, w2, &mut r),
                Linear::new(&mut store, "elen.2", w2, w3, &mut r),
            ],
        };
        Ok(Self {
            arch,
            store,
            embedder,
            prototypes,
            elen,
        })
    }

    /// Rebuilds a model from stored parameters.
    pub fn from_params(arch: GlgArch, store: ParamStore) -> Result<Self> {
        arch.validate()?;
        let embedder = Embedder {
            gin: [GinLayer::lookup(&store, "embed.gin0")?, GinLayer::lookup(&store, "embed.gin1")?],
            out: Linear::lookup(&store, "embed.out")?,
        };
        let prototypes = find(&store, "prototypes")?;
        let elen = Elen {
            layers: [
                Linear::lookup(&store, "elen.0")?,
                Linear::lookup(&store, "elen.1")?,
                Linear::lookup(&store, "elen.2")?,
            ],
        };
        let model = Self {
            arch,
            store,
            embedder,
            prototypes,
            elen,
        };
        model.check_shapes()?;
        Ok(model)
    }

    fn check_shapes(&self) -> Result<()> {
        let a = &self.arch;
        let expect = |id: ParamId, shape: (usize, usize), op: &'static str| {
            let got = self.store.get(id).value.shape();
            if got == shape {
                Ok(())
            } else {
                Err(Error::Shape { op, lhs: shape, rhs: got })
            }
        };
        expect(self.embedder.gin[0].mlp_in.weight, (a.in_dim, a.hidden), "embedder input")?;
        expect(self.embedder.out.weight, (3 * a.hidden, a.embed_dim), "embedder output")?;
        expect(self.prototypes, (a.concepts, a.embed_dim), "prototypes")?;
        expect(self.elen.layers[0].weight, (a.concepts, ELEN_WIDTHS[0]), "logic network input")?;
        Ok(())
    }

    /// Parameters of the embedder and prototypes, then of the logic network.
    pub fn param_groups(&self) -> (Vec<ParamId>, Vec<ParamId>) {
        let elen: Vec<ParamId> = self.elen.layers.iter().flat_map(|l| l.params()).collect();
        let rest = self.store.ids().filter(|id| !elen.contains(id)).collect();
        (rest, elen)
    }

    pub fn prototype_matrix(&self) -> &Matrix {
        &self.store.get(self.prototypes).value
    }

    pub fn forward(&self, tape: &mut Tape, batch: &SampleBatch, discretize: bool) -> Result<Forward> {
        let embeddings = self.embedder.forward(tape, &self.store, &batch.graphs)?;
        let p = tape.param(&self.store, self.prototypes);
        let (soft, distances) = project_tape(tape, embeddings, p, self.arch.projection_eps)?;
        let used = if discretize { concepts::discretize_st(tape, soft) } else { soft };
        let pooled = tape.segment_max(used, batch.owners.clone())?;
        let probability = self.elen.forward(tape, &self.store, pooled)?;
        Ok(Forward {
            embeddings,
            distances,
            soft,
            used,
            pooled,
            probability,
        })
    }

    /// Embeddings of standalone graphs, one row each.
    pub fn embed(&self, graphs: &[&Graph]) -> Result<Matrix> {
        let mut rows = Vec::with_capacity(graphs.len() * self.arch.embed_dim);
        for chunk in graphs.chunks(512) {
            let batch = GraphBatch::new(chunk.iter().copied())?;
            let mut tape = Tape::new();
            let e = self.embedder.forward(&mut tape, &self.store, &batch)?;
            rows.extend_from_slice(tape.value(e).data());
        }
        Matrix::from_vec(graphs.len(), self.arch.embed_dim, rows)
    }

    /// Soft concept assignments of standalone graphs.
    pub fn concept_vectors(&self, graphs: &[&Graph]) -> Result<Matrix> {
        let e = self.embed(graphs)?;
        let mut out = Matrix::zeros(graphs.len(), self.arch.concepts);
        for r in 0..e.rows() {
            let v = concepts::project(e.row(r), self.prototype_matrix(), self.arch.projection_eps)?;
            out.row_mut(r).copy_from_slice(&v.soft);
        }
        Ok(out)
    }

    /// Forward pass without gradients over all samples.
    pub fn evaluate(&self, samples: &[&GlgSample], discretize: bool, threshold: f64) -> Result<Vec<SampleOutput>> {
        let mut out: Vec<SampleOutput> = Vec::with_capacity(samples.len());
        let with: Vec<usize> = (0..samples.len()).filter(|&i| !samples[i].explanations.is_empty()).collect();
        let mut slots: Vec<Option<SampleOutput>> = samples.iter().map(|_| None).collect();
        for chunk in with.chunks(256) {
            let batch_samples: Vec<&GlgSample> = chunk.iter().map(|&i| samples[i]).collect();
            let batch = SampleBatch::new(&batch_samples)?;
            let mut tape = Tape::new();
            let fwd = self.forward(&mut tape, &batch, discretize)?;
            let soft = tape.value(fwd.soft);
            let used = tape.value(fwd.used);
            let probs = tape.value(fwd.probability);
            for (b, &i) in chunk.iter().enumerate() {
                let rows = batch.owners[b]..batch.owners[b + 1];
                let soft_rows: Vec<Vec<f64>> = rows.clone().map(|r| soft.row(r).to_vec()).collect();
                let used_rows: Vec<Vec<f64>> = rows.map(|r| used.row(r).to_vec()).collect();
                let hard: Vec<Vec<f64>> = soft_rows
                    .iter()
                    .map(|s| {
                        let mut h = alloc::vec![0.0; s.len()];
                        h[math::argmax(s)] = 1.0;
                        h
                    })
                    .collect();
                let bits = concepts::pool_concepts(&hard, self.arch.concepts)?.bits;
                let p = probs[(b, 0)];
                slots[i] = Some(SampleOutput {
                    graph_id: samples[i].graph_id,
                    bits: Some(bits),
                    probability: Some(p),
                    class: Some(u8::from(p > threshold)),
                    soft: soft_rows,
                    used: used_rows,
                });
            }
        }
        for (i, slot) in slots.into_iter().enumerate() {
            out.push(slot.unwrap_or(SampleOutput {
                graph_id: samples[i].graph_id,
                bits: None,
                probability: None,
                class: None,
                soft: Vec::new(),
                used: Vec::new(),
            }));
        }
        Ok(out)
    }
}

/// Model output for one sample. `None` fields mark a graph with no
/// explanations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    pub graph_id: usize,
    /// Pooled argmax concepts.
    pub bits: Option<Vec<bool>>,
    pub probability: Option<f64>,
    pub class: Option<u8>,
    /// Soft concept vector of every explanation.
    pub soft: Vec<Vec<f64>>,
    /// Concept vectors as fed to pooling.
    pub used: Vec<Vec<f64>>,
}
