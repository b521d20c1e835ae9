//! Graph neural layers, the classifier being explained, and batching.

use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    AdamConfig, AdamState, EdgeIndex, Matrix, ParamId, ParamStore, SparseMatrix, Tape, Var,
};
use crate::graph::{adjacency_with_self_loops, normalized_adjacency_sparse, Graph, LabeledGraph};
use crate::math;
use crate::rng::{self, stream};
use crate::{Error, Result, Split};

/// Negative slope wherever a leaky ReLU is used.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Identity => x,
            Activation::Relu => tape.relu(x),
            Activation::LeakyRelu => tape.leaky_relu(x, LEAKY_SLOPE),
        }
    }
}

/// Glorot-uniform initialized matrix.
pub fn glorot(rows: usize, cols: usize, rng: &mut rng::Rng) -> Matrix {
    let limit = math::sqrt(6.0 / (rows + cols) as f64);
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// Affine map `x W + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, out: usize, rng: &mut rng::Rng) -> Self {
        Self {
            weight: store.add(format!("{name}.weight"), glorot(inp, out, rng)),
            bias: store.add(format!("{name}.bias"), Matrix::zeros(1, out)),
        }
    }

    pub fn lookup(store: &ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            weight: find(store, &format!("{name}.weight"))?,
            bias: find(store, &format!("{name}.bias"))?,
        })
    }

    pub fn in_dim(&self, store: &ParamStore) -> usize {
        store.get(self.weight).value.rows()
    }

    pub fn out_dim(&self, store: &ParamStore) -> usize {
        store.get(self.weight).value.cols()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let h = tape.matmul(x, w)?;
        tape.add_row(h, b)
    }

    pub fn params(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }
}

pub(crate) fn find(store: &ParamStore, name: &str) -> Result<ParamId> {
    store
        .find(name)
        .ok_or_else(|| Error::Config(format!("missing parameter {name}")))
}

/// How node states are mixed across edges in a GCN layer.
#[derive(Debug, Clone)]
pub enum Propagation {
    /// Precomputed `D̃^{-1/2}(A + I)D̃^{-1/2}`.
    Fixed(Rc<SparseMatrix>),
    /// Normalized propagation with one differentiable weight per edge.
    Weighted(Rc<EdgeIndex>, Var),
}

/// GCN layer `σ(Â H W + b)`; the bias is optional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcnLayer {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub activation: Activation,
}

impl GcnLayer {
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, h: Var, prop: &Propagation) -> Result<Var> {
        let w = tape.param(store, self.weight);
        let hw = tape.matmul(h, w)?;
        let mixed = match prop {
            Propagation::Fixed(a) => tape.spmm(a.clone(), hw)?,
            Propagation::Weighted(g, wv) => tape.gcn_propagate(g.clone(), *wv, hw)?,
        };
        let mixed = match self.bias {
            Some(b) => {
                let b = tape.param(store, b);
                tape.add_row(mixed, b)?
            }
            None => mixed,
        };
        Ok(self.activation.apply(tape, mixed))
    }
}

/// GIN layer with ε = 0: `MLP(h_v + Σ_{u ∈ N(v)} h_u)`, the MLP being two
/// affine maps with a ReLU between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GinLayer {
    pub mlp_in: Linear,
    pub mlp_out: Linear,
}

impl GinLayer {
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, hidden: usize, rng: &mut rng::Rng) -> Self {
        Self {
            mlp_in: Linear::new(store, &format!("{name}.mlp0"), inp, hidden, rng),
            mlp_out: Linear::new(store, &format!("{name}.mlp1"), hidden, hidden, rng),
        }
    }

    pub fn lookup(store: &ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            mlp_in: Linear::lookup(store, &format!("{name}.mlp0"))?,
            mlp_out: Linear::lookup(store, &format!("{name}.mlp1"))?,
        })
    }

    /// `sum_op` is `A + I` for the (batched) graph.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, h: Var, sum_op: &Rc<SparseMatrix>) -> Result<Var> {
        let agg = tape.spmm(sum_op.clone(), h)?;
        let z = self.mlp_in.forward(tape, store, agg)?;
        let z = tape.relu(z);
        self.mlp_out.forward(tape, store, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutSpec {
    /// Column means of node states.
    Mean,
    /// `leaky_relu([max ‖ mean ‖ sum])`.
    ConcatNonlinear,
}

impl ReadoutSpec {
    pub fn output_dim(self, hidden: usize) -> usize {
        match self {
            ReadoutSpec::Mean => hidden,
            ReadoutSpec::ConcatNonlinear => 3 * hidden,
        }
    }

    /// One output row per segment of `offsets`.
    pub fn forward(self, tape: &mut Tape, h: Var, offsets: &Rc<Vec<usize>>) -> Result<Var> {
        if offsets.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Empty("readout over an empty graph"));
        }
        match self {
            ReadoutSpec::Mean => tape.segment_mean(h, offsets.clone()),
            ReadoutSpec::ConcatNonlinear => {
                let mx = tape.segment_max(h, offsets.clone())?;
                let mean = tape.segment_mean(h, offsets.clone())?;
                let sum = tape.segment_sum(h, offsets.clone())?;
                let cat = tape.concat_cols(&[mx, mean, sum])?;
                Ok(tape.leaky_relu(cat, LEAKY_SLOPE))
            }
        }
    }
}

/// Readout of a single node-state matrix, outside of any training tape.
pub fn readout(h: &Matrix, spec: ReadoutSpec) -> Result<Matrix> {
    let mut tape = Tape::new();
    let hv = tape.leaf(h.clone());
    let offsets = Rc::new(vec![0, h.rows()]);
    let out = spec.forward(&mut tape, hv, &offsets)?;
    Ok(tape.value(out).clone())
}

/// Several graphs stacked into one block-diagonal graph.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub features: Matrix,
    pub offsets: Rc<Vec<usize>>,
    pub normalized: Rc<SparseMatrix>,
    pub with_self_loops: Rc<SparseMatrix>,
}

impl GraphBatch {
    pub fn new<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> Result<Self> {
        let graphs: Vec<&Graph> = graphs.into_iter().collect();
        let dim = graphs.first().map_or(0, |g| g.feature_dim());
        let total: usize = graphs.iter().map(|g| g.node_count()).sum();
        let mut features = Matrix::zeros(total, dim);
        let mut offsets = Vec::with_capacity(graphs.len() + 1);
        offsets.push(0);
        let mut norm = Vec::new();
        let mut loops = Vec::new();
        let mut base = 0;
        for g in &graphs {
            if g.feature_dim() != dim {
                return Err(Error::Shape {
                    op: "GraphBatch",
                    lhs: (0, dim),
                    rhs: (0, g.feature_dim()),
                });
            }
            for r in 0..g.node_count() {
                features.row_mut(base + r).copy_from_slice(g.features().row(r));
            }
            let a = normalized_adjacency_sparse(g);
            for r in 0..g.node_count() {
                norm.extend(a.row_entries(r).map(|(c, v)| (base + r, base + c, v)));
            }
            let s = adjacency_with_self_loops(g);
            for r in 0..g.node_count() {
                loops.extend(s.row_entries(r).map(|(c, v)| (base + r, base + c, v)));
            }
            base += g.node_count();
            offsets.push(base);
        }
        Ok(Self {
            features,
            offsets: Rc::new(offsets),
            normalized: Rc::new(SparseMatrix::from_triplets(total, total, norm)),
            with_self_loops: Rc::new(SparseMatrix::from_triplets(total, total, loops)),
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Architecture of the classifier being explained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierArch {
    pub in_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub readout: ReadoutSpec,
}

impl Default for ClassifierArch {
    fn default() -> Self {
        Self {
            in_dim: 1,
            hidden: 20,
            layers: 3,
            readout: ReadoutSpec::ConcatNonlinear,
        }
    }
}

/// Stacked GCN layers, a readout, and a single-logit head.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnClassifier {
    pub arch: ClassifierArch,
    pub store: ParamStore,
    layers: Vec<GcnLayer>,
    head: Linear,
}

/// Binary prediction of the classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: u8,
    /// Probability of class 1.
    pub probability: f64,
    pub logit: f64,
}

impl Prediction {
    pub fn from_logit(logit: f64) -> Self {
        Self {
            // a zero logit is a tie and goes to class 0
            class: u8::from(logit > 0.0),
            probability: math::sigmoid(logit),
            logit,
        }
    }
}

impl GnnClassifier {
    pub fn new(arch: ClassifierArch, seed: u64) -> Result<Self> {
        if arch.layers == 0 || arch.hidden == 0 || arch.in_dim == 0 {
            return Err(Error::Config(String::from("classifier dimensions must be positive")));
        }
        let mut rng = rng::rng(seed, stream::GNN_INIT, 0);
        let mut store = ParamStore::new();
        let mut layers = Vec::with_capacity(arch.layers);
        let mut inp = arch.in_dim;
        for k in 0..arch.layers {
            let weight = store.add(format!("gcn{k}.weight"), glorot(inp, arch.hidden, &mut rng));
            let bias = store.add(format!("gcn{k}.bias"), Matrix::zeros(1, arch.hidden));
            layers.push(GcnLayer {
                weight,
                bias: Some(bias),
                activation: Activation::Relu,
            });
            inp = arch.hidden;
        }
        let head = Linear::new(&mut store, "head", arch.readout.output_dim(arch.hidden), 1, &mut rng);
        Ok(Self {
            arch,
            store,
            layers,
            head,
        })
    }

    /// Rebuilds a classifier from stored parameters.
    pub fn from_params(arch: ClassifierArch, store: ParamStore) -> Result<Self> {
        let mut layers = Vec::with_capacity(arch.layers);
        for k in 0..arch.layers {
            let weight = find(&store, &format!("gcn{k}.weight"))?;
            let bias = find(&store, &format!("gcn{k}.bias"))?;
            layers.push(GcnLayer {
                weight,
                bias: Some(bias),
                activation: Activation::Relu,
            });
        }
        let head = Linear::lookup(&store, "head")?;
        let model = Self {
            arch,
            store,
            layers,
            head,
        };
        model.check_shapes()?;
        Ok(model)
    }

    fn check_shapes(&self) -> Result<()> {
        let mut inp = self.arch.in_dim;
        for l in &self.layers {
            let shape = self.store.get(l.weight).value.shape();
            if shape != (inp, self.arch.hidden) {
                return Err(Error::Shape {
                    op: "classifier layer",
                    lhs: (inp, self.arch.hidden),
                    rhs: shape,
                });
            }
            if let Some(b) = l.bias {
                let bs = self.store.get(b).value.shape();
                if bs != (1, self.arch.hidden) {
                    return Err(Error::Shape {
                        op: "classifier bias",
                        lhs: (1, self.arch.hidden),
                        rhs: bs,
                    });
                }
            }
            inp = self.arch.hidden;
        }
        let head_in = self.arch.readout.output_dim(self.arch.hidden);
        if self.head.in_dim(&self.store) != head_in || self.head.out_dim(&self.store) != 1 {
            return Err(Error::Shape {
                op: "classifier head",
                lhs: (head_in, 1),
                rhs: self.store.get(self.head.weight).value.shape(),
            });
        }
        Ok(())
    }

    /// Logits (`graphs × 1`) for a batch.
    pub fn forward(&self, tape: &mut Tape, batch: &GraphBatch) -> Result<Var> {
        let x = tape.leaf(batch.features.clone());
        let prop = Propagation::Fixed(batch.normalized.clone());
        self.forward_with(tape, x, &prop, &batch.offsets)
    }

    /// Logit of one graph whose edges are scaled by `edge_weights`
    /// (`|E| × 1`, already on the tape).
    pub fn forward_weighted(&self, tape: &mut Tape, g: &Graph, edge_weights: Var) -> Result<Var> {
        self.check_input(g)?;
        let x = tape.leaf(g.features().clone());
        let index = Rc::new(EdgeIndex {
            node_count: g.node_count(),
            edges: g.edges().to_vec(),
        });
        let prop = Propagation::Weighted(index, edge_weights);
        let offsets = Rc::new(vec![0, g.node_count()]);
        self.forward_with(tape, x, &prop, &offsets)
    }

    fn forward_with(&self, tape: &mut Tape, x: Var, prop: &Propagation, offsets: &Rc<Vec<usize>>) -> Result<Var> {
        let mut h = x;
        for layer in &self.layers {
            h = layer.forward(tape, &self.store, h, prop)?;
        }
        let pooled = self.arch.readout.forward(tape, h, offsets)?;
        self.head.forward(tape, &self.store, pooled)
    }

    fn check_input(&self, g: &Graph) -> Result<()> {
        if g.feature_dim() != self.arch.in_dim {
            return Err(Error::Shape {
                op: "predict",
                lhs: (g.node_count(), self.arch.in_dim),
                rhs: (g.node_count(), g.feature_dim()),
            });
        }
        if g.node_count() == 0 {
            return Err(Error::Empty("graph with no nodes"));
        }
        Ok(())
    }

    pub fn predict(&self, g: &Graph) -> Result<Prediction> {
        self.check_input(g)?;
        let batch = GraphBatch::new([g])?;
        let mut tape = Tape::new();
        let logits = self.forward(&mut tape, &batch)?;
        Ok(Prediction::from_logit(tape.value(logits).item()))
    }

    pub fn predict_many<'a>(&self, graphs: impl IntoIterator<Item = &'a Graph>) -> Result<Vec<Prediction>> {
        let graphs: Vec<&Graph> = graphs.into_iter().collect();
        let mut out = Vec::with_capacity(graphs.len());
        for chunk in graphs.chunks(256) {
            for g in chunk {
                self.check_input(g)?;
            }
            let batch = GraphBatch::new(chunk.iter().copied())?;
            let mut tape = Tape::new();
            let logits = self.forward(&mut tape, &batch)?;
            out.extend(tape.value(logits).data().iter().map(|&z| Prediction::from_logit(z)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnTrainConfig {
    pub hidden: usize,
    pub layers: usize,
    pub readout: ReadoutSpec,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for GnnTrainConfig {
    fn default() -> Self {
        Self {
            hidden: 20,
            layers: 3,
            readout: ReadoutSpec::ConcatNonlinear,
            learning_rate: 5e-3,
            max_epochs: 1000,
            patience: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub model: GnnClassifier,
    pub best_epoch: Option<usize>,
    /// Optimizer steps taken up to the kept snapshot.
    pub steps: u64,
    pub curve: Vec<EpochRecord>,
}

fn accuracy(model: &GnnClassifier, graphs: &[&LabeledGraph]) -> Result<f64> {
    if graphs.is_empty() {
        return Ok(0.0);
    }
    let preds = model.predict_many(graphs.iter().map(|g| &g.graph))?;
    let correct = preds.iter().zip(graphs).filter(|(p, g)| p.class == g.label).count();
    Ok(correct as f64 / graphs.len() as f64)
}

/// Trains with Adam on plain BCE, keeping the epoch with the best
/// validation accuracy and stopping after `patience` epochs without
/// improvement.
pub fn train_classifier(dataset: &[LabeledGraph], cfg: &GnnTrainConfig) -> Result<TrainedClassifier> {
    let train: Vec<&LabeledGraph> = dataset.iter().filter(|g| g.split == Split::Train).collect();
    let val: Vec<&LabeledGraph> = dataset.iter().filter(|g| g.split == Split::Val).collect();
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation split"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config(String::from("batch_size must be positive")));
    }
    let arch = ClassifierArch {
        in_dim: train[0].graph.feature_dim(),
        hidden: cfg.hidden,
        layers: cfg.layers,
        readout: cfg.readout,
    };
    let mut model = GnnClassifier::new(arch, cfg.seed)?;
    let ids: Vec<ParamId> = model.store.ids().collect();
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.learning_rate), &model.store, ids);
    let mut shuffle = rng::rng(cfg.seed, stream::GNN_SHUFFLE, 0);

    let mut best = model.clone();
    let mut best_val = accuracy(&model, &val)?;
    let mut best_epoch = None;
    let mut best_steps = 0;
    let mut since_best = 0;
    let mut curve = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle);
        let mut total_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let graphs: Vec<&LabeledGraph> = chunk.iter().map(|&i| train[i]).collect();
            let batch = GraphBatch::new(graphs.iter().map(|g| &g.graph))?;
            let targets: Vec<f64> = graphs.iter().map(|g| f64::from(g.label)).collect();
            let mut tape = Tape::new();
            let logits = model.forward(&mut tape, &batch)?;
            let probs = tape.sigmoid(logits);
            let loss = tape.focal_bce(probs, &targets, 0.0)?;
            total_loss += tape.value(loss).item() * chunk.len() as f64;
            let grads = tape.backward(loss)?;
            model.store.zero_grad();
            model.store.accumulate(&tape, &grads);
            adam.step(&mut model.store);
        }
        let train_acc = accuracy(&model, &train)?;
        let val_acc = accuracy(&model, &val)?;
        curve.push(EpochRecord {
            epoch,
            loss: total_loss / train.len() as f64,
            train_accuracy: train_acc,
            val_accuracy: val_acc,
        });
        if val_acc > best_val {
            best_val = val_acc;
            best = model.clone();
            best_epoch = Some(epoch);
            best_steps = adam.step_count();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok(TrainedClassifier {
        model: best,
        best_epoch,
        steps: best_steps,
        curve,
    })
}
