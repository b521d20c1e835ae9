use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{Matrix, SparseMatrix};
use super::params::{ParamId, ParamStore};
use crate::math;
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Edge list of an undirected graph together with its node count, shared
/// between tape nodes without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeIndex {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Log(Var),
    Exp(Var),
    RowSoftmax(Var),
    ConcatCols(Vec<Var>),
    Transpose(Var),
    SumRows(Var),
    MeanRows(Var),
    MaxRows(Var, Vec<usize>),
    SumAll(Var),
    MeanAll(Var),
    SquaredEuclidean(Var, Var),
    PairwiseSqDist(Var, Var),
    Spmm(Rc<SparseMatrix>, Var),
    GcnPropagate {
        graph: Rc<EdgeIndex>,
        weights: Var,
        h: Var,
        degrees: Vec<f64>,
    },
    SegmentSum(Var, Rc<Vec<usize>>),
    SegmentMean(Var, Rc<Vec<usize>>),
    SegmentMax(Var, Rc<Vec<usize>>, Vec<Option<usize>>),
    StraightThrough(Var),
    FocalBce {
        p: Var,
        targets: Vec<f64>,
        gamma: f64,
    },
}

struct Node {
    value: Matrix,
    op: Op,
}

/// Probability clamp used by the focal/BCE loss.
pub const PROB_CLAMP: f64 = 1e-7;

/// Records a forward computation for one reverse pass. Rebuilt on every
/// forward; parameters are copied in from a [`ParamStore`].
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to every recorded value.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Matrix> {
        self.grads[v.0].as_ref()
    }
}

fn shape_err(op: &'static str, a: &Matrix, b: &Matrix) -> Error {
    Error::Shape {
        op,
        lhs: a.shape(),
        rhs: b.shape(),
    }
}

fn accumulate(slot: &mut Option<Matrix>, g: Matrix) {
    match slot {
        Some(existing) => existing.add_assign(&g),
        None => *slot = Some(g),
    }
}

fn check_segments(offsets: &[usize], rows: usize) -> Result<()> {
    let ok = offsets.first() == Some(&0)
        && offsets.last() == Some(&rows)
        && offsets.windows(2).all(|w| w[0] <= w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::Shape {
            op: "segment",
            lhs: (rows, 0),
            rhs: (offsets.last().copied().unwrap_or(0), offsets.len()),
        })
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub(crate) fn param_leaves(&self) -> impl Iterator<Item = (Var, ParamId)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n.op {
            Op::Param(id) => Some((Var(i), id)),
            _ => None,
        })
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that is not a stored parameter (inputs, constants, or values
    /// whose gradient the caller reads back from [`Gradients`]).
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.get(id).value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("add", x, y));
        }
        let mut v = x.clone();
        v.add_assign(y);
        Ok(self.push(v, Op::Add(a, b)))
    }

    /// `a (n×k) + b (1×k)`, broadcasting `b` over rows.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if y.rows() != 1 || y.cols() != x.cols() {
            return Err(shape_err("add_row", x, y));
        }
        let mut v = x.clone();
        for r in 0..v.rows() {
            for (o, b) in v.row_mut(r).iter_mut().zip(y.data()) {
                *o += b;
            }
        }
        Ok(self.push(v, Op::AddRow(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("sub", x, y));
        }
        let data = x.data().iter().zip(y.data()).map(|(p, q)| p - q).collect();
        let v = Matrix::from_vec(x.rows(), x.cols(), data)?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("mul", x, y));
        }
        let data = x.data().iter().zip(y.data()).map(|(p, q)| p * q).collect();
        let v = Matrix::from_vec(x.rows(), x.cols(), data)?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x * c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddScalar(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(v, Op::Relu(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(v, Op::LeakyRelu(a, slope))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(math::sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let v = self.value(a).map(math::ln);
        self.push(v, Op::Log(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(math::exp);
        self.push(v, Op::Exp(a))
    }

    pub fn row_softmax(&mut self, a: Var) -> Var {
        let v = softmax_rows(self.value(a));
        self.push(v, Op::RowSoftmax(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |p| self.value(*p).rows());
        let mut cols = 0;
        for p in parts {
            let m = self.value(*p);
            if m.rows() != rows {
                return Err(shape_err("concat_cols", self.value(parts[0]), m));
            }
            cols += m.cols();
        }
        let mut v = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            let m = self.value(*p);
            for r in 0..rows {
                v.row_mut(r)[offset..offset + m.cols()].copy_from_slice(m.row(r));
            }
            offset += m.cols();
        }
        Ok(self.push(v, Op::ConcatCols(parts.to_vec())))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    /// Column sums, `n×k → 1×k`.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut v = Matrix::zeros(1, x.cols());
        for r in 0..x.rows() {
            for (o, y) in v.data_mut().iter_mut().zip(x.row(r)) {
                *o += y;
            }
        }
        self.push(v, Op::SumRows(a))
    }

    /// Column means, `n×k → 1×k`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.rows() == 0 {
            return Err(Error::Empty("mean_rows"));
        }
        let n = x.rows() as f64;
        let mut v = Matrix::zeros(1, x.cols());
        for r in 0..x.rows() {
            for (o, y) in v.data_mut().iter_mut().zip(x.row(r)) {
                *o += y;
            }
        }
        v.data_mut().iter_mut().for_each(|o| *o /= n);
        Ok(self.push(v, Op::MeanRows(a)))
    }

    /// Column maxima, `n×k → 1×k`. Backward routes to the first maximal row.
    pub fn max_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.rows() == 0 {
            return Err(Error::Empty("max_rows"));
        }
        let mut v = Matrix::row_vector(x.row(0));
        let mut arg = vec![0usize; x.cols()];
        for r in 1..x.rows() {
            for (c, &y) in x.row(r).iter().enumerate() {
                if y > v[(0, c)] {
                    v[(0, c)] = y;
                    arg[c] = r;
                }
            }
        }
        Ok(self.push(v, Op::MaxRows(a, arg)))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let v = Matrix::scalar(self.value(a).sum());
        self.push(v, Op::SumAll(a))
    }

    pub fn mean_all(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let n = x.data().len();
        if n == 0 {
            return Err(Error::Empty("mean_all"));
        }
        let v = Matrix::scalar(x.sum() / n as f64);
        Ok(self.push(v, Op::MeanAll(a)))
    }

    /// `‖a − b‖²` for two row vectors of equal shape.
    pub fn squared_euclidean(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("squared_euclidean", x, y));
        }
        let s = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        Ok(self.push(Matrix::scalar(s), Op::SquaredEuclidean(a, b)))
    }

    /// `out[i][j] = ‖a_i − b_j‖²` for `a: n×d`, `b: m×d`.
    pub fn pairwise_sq_dist(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.cols() {
            return Err(shape_err("pairwise_sq_dist", x, y));
        }
        let mut v = Matrix::zeros(x.rows(), y.rows());
        for i in 0..x.rows() {
            for j in 0..y.rows() {
                v[(i, j)] = x
                    .row(i)
                    .iter()
                    .zip(y.row(j))
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
            }
        }
        Ok(self.push(v, Op::PairwiseSqDist(a, b)))
    }

    /// Constant sparse operator times a value.
    pub fn spmm(&mut self, a: Rc<SparseMatrix>, h: Var) -> Result<Var> {
        let v = a.matmul_dense(self.value(h))?;
        Ok(self.push(v, Op::Spmm(a, h)))
    }

    /// Symmetrically normalized propagation `D̃^{-1/2}(A_w + I)D̃^{-1/2} H`
    /// where `A_w` holds one differentiable weight per undirected edge
    /// (`weights` is `|E| × 1`).
    pub fn gcn_propagate(&mut self, graph: Rc<EdgeIndex>, weights: Var, h: Var) -> Result<Var> {
        let n = graph.node_count;
        let (w, x) = (self.value(weights), self.value(h));
        if w.shape() != (graph.edges.len(), 1) {
            return Err(Error::Shape {
                op: "gcn_propagate(weights)",
                lhs: (graph.edges.len(), 1),
                rhs: w.shape(),
            });
        }
        if x.rows() != n {
            return Err(Error::Shape {
                op: "gcn_propagate(h)",
                lhs: (n, x.cols()),
                rhs: x.shape(),
            });
        }
        let mut degrees = vec![1.0; n];
        for (k, &(u, v)) in graph.edges.iter().enumerate() {
            degrees[u] += w.data()[k];
            degrees[v] += w.data()[k];
        }
        let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / math::sqrt(*d)).collect();
        let f = x.cols();
        let mut out = Matrix::zeros(n, f);
        for i in 0..n {
            let c = inv_sqrt[i] * inv_sqrt[i];
            for (o, y) in out.row_mut(i).iter_mut().zip(x.row(i)) {
                *o += c * y;
            }
        }
        for (k, &(u, v)) in graph.edges.iter().enumerate() {
            let c = w.data()[k] * inv_sqrt[u] * inv_sqrt[v];
            for j in 0..f {
                let (xu, xv) = (x[(u, j)], x[(v, j)]);
                out[(u, j)] += c * xv;
                out[(v, j)] += c * xu;
            }
        }
        Ok(self.push(
            out,
            Op::GcnPropagate {
                graph,
                weights,
                h,
                degrees,
            },
        ))
    }

    /// Per-segment column sums. `offsets` has one more entry than segments;
    /// segment `s` covers rows `offsets[s]..offsets[s + 1]`.
    pub fn segment_sum(&mut self, a: Var, offsets: Rc<Vec<usize>>) -> Result<Var> {
        let x = self.value(a);
        check_segments(&offsets, x.rows())?;
        let v = segment_reduce(x, &offsets, false);
        Ok(self.push(v, Op::SegmentSum(a, offsets)))
    }

    /// Per-segment column means; empty segments give zeros.
    pub fn segment_mean(&mut self, a: Var, offsets: Rc<Vec<usize>>) -> Result<Var> {
        let x = self.value(a);
        check_segments(&offsets, x.rows())?;
        let v = segment_reduce(x, &offsets, true);
        Ok(self.push(v, Op::SegmentMean(a, offsets)))
    }

    /// Per-segment column maxima; empty segments give zeros. Backward
    /// routes to the first maximal row of each segment.
    pub fn segment_max(&mut self, a: Var, offsets: Rc<Vec<usize>>) -> Result<Var> {
        let x = self.value(a);
        check_segments(&offsets, x.rows())?;
        let segs = offsets.len() - 1;
        let cols = x.cols();
        let mut v = Matrix::zeros(segs, cols);
        let mut arg = vec![None; segs * cols];
        for s in 0..segs {
            for r in offsets[s]..offsets[s + 1] {
                for c in 0..cols {
                    let y = x[(r, c)];
                    let slot = &mut arg[s * cols + c];
                    if slot.is_none() || y > v[(s, c)] {
                        v[(s, c)] = y;
                        *slot = Some(r);
                    }
                }
            }
        }
        Ok(self.push(v, Op::SegmentMax(a, offsets, arg)))
    }

    /// Straight-through argmax: the forward value is the row-wise one-hot
    /// argmax (ties to the lowest index); the backward pass is the identity,
    /// so gradients flow as if the soft input had been used directly.
    pub fn straight_through(&mut self, a: Var) -> Var {
        let v = one_hot_rows(self.value(a));
        self.push(v, Op::StraightThrough(a))
    }

    /// Mean focal binary cross-entropy of probabilities `p` (`n × 1`)
    /// against `targets`, with `p` clamped to `[1e-7, 1 − 1e-7]`.
    pub fn focal_bce(&mut self, p: Var, targets: &[f64], gamma: f64) -> Result<Var> {
        let x = self.value(p);
        if x.shape() != (targets.len(), 1) {
            return Err(Error::Shape {
                op: "focal_bce",
                lhs: x.shape(),
                rhs: (targets.len(), 1),
            });
        }
        if targets.is_empty() {
            return Err(Error::Empty("focal_bce"));
        }
        let total: f64 = x
            .data()
            .iter()
            .zip(targets)
            .map(|(&p, &y)| focal_value(p, y, gamma))
            .sum();
        let v = Matrix::scalar(total / targets.len() as f64);
        Ok(self.push(
            v,
            Op::FocalBce {
                p,
                targets: targets.to_vec(),
                gamma,
            },
        ))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<Matrix>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Matrix::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backward_node(i, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backward_node(&self, i: usize, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let node = &self.nodes[i];
        let out = &node.value;
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let ga = g.matmul(&y.transpose())?;
                let gb = x.transpose().matmul(g)?;
                accumulate(&mut grads[a.0], ga);
                accumulate(&mut grads[b.0], gb);
            }
            Op::Add(a, b) => {
                accumulate(&mut grads[a.0], g.clone());
                accumulate(&mut grads[b.0], g.clone());
            }
            Op::AddRow(a, b) => {
                accumulate(&mut grads[a.0], g.clone());
                let mut gb = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, x) in gb.data_mut().iter_mut().zip(g.row(r)) {
                        *o += x;
                    }
                }
                accumulate(&mut grads[b.0], gb);
            }
            Op::Sub(a, b) => {
                accumulate(&mut grads[a.0], g.clone());
                accumulate(&mut grads[b.0], g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                accumulate(&mut grads[a.0], zip_map(g, y, |g, y| g * y));
                accumulate(&mut grads[b.0], zip_map(g, x, |g, x| g * x));
            }
            Op::Scale(a, c) => accumulate(&mut grads[a.0], g.map(|x| x * c)),
            Op::AddScalar(a) => accumulate(&mut grads[a.0], g.clone()),
            Op::Relu(a) => {
                let x = self.value(*a);
                accumulate(
                    &mut grads[a.0],
                    zip_map(g, x, |g, x| if x > 0.0 { g } else { 0.0 }),
                );
            }
            Op::LeakyRelu(a, slope) => {
                let x = self.value(*a);
                let s = *slope;
                accumulate(
                    &mut grads[a.0],
                    zip_map(g, x, |g, x| if x > 0.0 { g } else { s * g }),
                );
            }
            Op::Sigmoid(a) => {
                accumulate(&mut grads[a.0], zip_map(g, out, |g, s| g * s * (1.0 - s)));
            }
            Op::Log(a) => {
                let x = self.value(*a);
                accumulate(&mut grads[a.0], zip_map(g, x, |g, x| g / x));
            }
            Op::Exp(a) => accumulate(&mut grads[a.0], zip_map(g, out, |g, e| g * e)),
            Op::RowSoftmax(a) => {
                let mut ga = Matrix::zeros(out.rows(), out.cols());
                for r in 0..out.rows() {
                    let s = out.row(r);
                    let gr = g.row(r);
                    let dot: f64 = s.iter().zip(gr).map(|(s, g)| s * g).sum();
                    for (c, o) in ga.row_mut(r).iter_mut().enumerate() {
                        *o = s[c] * (gr[c] - dot);
                    }
                }
                accumulate(&mut grads[a.0], ga);
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let cols = self.value(*p).cols();
                    let mut gp = Matrix::zeros(g.rows(), cols);
                    for r in 0..g.rows() {
                        gp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + cols]);
                    }
                    offset += cols;
                    accumulate(&mut grads[p.0], gp);
                }
            }
            Op::Transpose(a) => accumulate(&mut grads[a.0], g.transpose()),
            Op::SumRows(a) | Op::MeanRows(a) => {
                let x = self.value(*a);
                let scale = if matches!(node.op, Op::MeanRows(_)) {
                    1.0 / x.rows() as f64
                } else {
                    1.0
                };
                let mut ga = Matrix::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    for (o, y) in ga.row_mut(r).iter_mut().zip(g.data()) {
                        *o = y * scale;
                    }
                }
                accumulate(&mut grads[a.0], ga);
            }
            Op::MaxRows(a, arg) => {
                let x = self.value(*a);
                let mut ga = Matrix::zeros(x.rows(), x.cols());
                for (c, &r) in arg.iter().enumerate() {
                    ga[(r, c)] = g[(0, c)];
                }
                accumulate(&mut grads[a.0], ga);
            }
            Op::SumAll(a) => {
                let x = self.value(*a);
                accumulate(&mut grads[a.0], Matrix::filled(x.rows(), x.cols(), g.item()));
            }
            Op::MeanAll(a) => {
                let x = self.value(*a);
                let n = x.data().len() as f64;
                accumulate(
                    &mut grads[a.0],
                    Matrix::filled(x.rows(), x.cols(), g.item() / n),
                );
            }
            Op::SquaredEuclidean(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let s = 2.0 * g.item();
                let ga = zip_map(x, y, |p, q| s * (p - q));
                accumulate(&mut grads[b.0], ga.map(|v| -v));
                accumulate(&mut grads[a.0], ga);
            }
            Op::PairwiseSqDist(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let mut ga = Matrix::zeros(x.rows(), x.cols());
                let mut gb = Matrix::zeros(y.rows(), y.cols());
                for i in 0..x.rows() {
                    for j in 0..y.rows() {
                        let s = 2.0 * g[(i, j)];
                        if s == 0.0 {
                            continue;
                        }
                        for k in 0..x.cols() {
                            let d = s * (x[(i, k)] - y[(j, k)]);
                            ga[(i, k)] += d;
                            gb[(j, k)] -= d;
                        }
                    }
                }
                accumulate(&mut grads[a.0], ga);
                accumulate(&mut grads[b.0], gb);
            }
            Op::Spmm(a, h) => accumulate(&mut grads[h.0], a.transpose_matmul_dense(g)?),
            Op::GcnPropagate {
                graph,
                weights,
                h,
                degrees,
            } => {
                let (w, x) = (self.value(*weights), self.value(*h));
                let n = graph.node_count;
                let f = x.cols();
                let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / math::sqrt(*d)).collect();
                // The normalized operator is symmetric, so dL/dH = Â·G.
                let mut gh = Matrix::zeros(n, f);
                // t[k] = Σ_j S_kj Â_kj + Σ_i S_ik Â_ik with S_ij = ⟨g_i, h_j⟩.
                let mut t = vec![0.0; n];
                for i in 0..n {
                    let c = inv_sqrt[i] * inv_sqrt[i];
                    let s_ii: f64 = g.row(i).iter().zip(x.row(i)).map(|(a, b)| a * b).sum();
                    t[i] += 2.0 * s_ii * c;
                    for (o, y) in gh.row_mut(i).iter_mut().zip(g.row(i)) {
                        *o += c * y;
                    }
                }
                let mut gw = Matrix::zeros(graph.edges.len(), 1);
                let mut direct = vec![0.0; graph.edges.len()];
                for (k, &(u, v)) in graph.edges.iter().enumerate() {
                    let norm = inv_sqrt[u] * inv_sqrt[v];
                    let c = w.data()[k] * norm;
                    let mut s_uv = 0.0;
                    let mut s_vu = 0.0;
                    for j in 0..f {
                        s_uv += g[(u, j)] * x[(v, j)];
                        s_vu += g[(v, j)] * x[(u, j)];
                        gh[(u, j)] += c * g[(v, j)];
                        gh[(v, j)] += c * g[(u, j)];
                    }
                    let contrib = (s_uv + s_vu) * c;
                    t[u] += contrib;
                    t[v] += contrib;
                    direct[k] = (s_uv + s_vu) * norm;
                }
                let d_deg: Vec<f64> = (0..n).map(|k| -0.5 * t[k] / degrees[k]).collect();
                for (k, &(u, v)) in graph.edges.iter().enumerate() {
                    gw.data_mut()[k] = direct[k] + d_deg[u] + d_deg[v];
                }
                accumulate(&mut grads[h.0], gh);
                accumulate(&mut grads[weights.0], gw);
            }
            Op::SegmentSum(a, offsets) | Op::SegmentMean(a, offsets) => {
                let mean = matches!(node.op, Op::SegmentMean(..));
                let x = self.value(*a);
                let mut ga = Matrix::zeros(x.rows(), x.cols());
                for s in 0..offsets.len() - 1 {
                    let len = offsets[s + 1] - offsets[s];
                    let scale = if mean && len > 0 { 1.0 / len as f64 } else { 1.0 };
                    for r in offsets[s]..offsets[s + 1] {
                        for (o, y) in ga.row_mut(r).iter_mut().zip(g.row(s)) {
                            *o = y * scale;
                        }
                    }
                }
                accumulate(&mut grads[a.0], ga);
            }
            Op::SegmentMax(a, offsets, arg) => {
                let x = self.value(*a);
                let cols = x.cols();
                let mut ga = Matrix::zeros(x.rows(), cols);
                for s in 0..offsets.len() - 1 {
                    for c in 0..cols {
                        if let Some(r) = arg[s * cols + c] {
                            ga[(r, c)] += g[(s, c)];
                        }
                    }
                }
                accumulate(&mut grads[a.0], ga);
            }
            Op::StraightThrough(a) => accumulate(&mut grads[a.0], g.clone()),
            Op::FocalBce { p, targets, gamma } => {
                let x = self.value(*p);
                let n = targets.len() as f64;
                let scale = g.item() / n;
                let data = x
                    .data()
                    .iter()
                    .zip(targets)
                    .map(|(&p, &y)| scale * focal_derivative(p, y, *gamma))
                    .collect();
                accumulate(&mut grads[p.0], Matrix::from_vec(x.rows(), 1, data)?);
            }
        }
        Ok(())
    }
}

fn zip_map(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Matrix::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

fn segment_reduce(x: &Matrix, offsets: &[usize], mean: bool) -> Matrix {
    let segs = offsets.len() - 1;
    let mut v = Matrix::zeros(segs, x.cols());
    for s in 0..segs {
        for r in offsets[s]..offsets[s + 1] {
            for (o, y) in v.row_mut(s).iter_mut().zip(x.row(r)) {
                *o += y;
            }
        }
        let len = offsets[s + 1] - offsets[s];
        if mean && len > 0 {
            v.row_mut(s).iter_mut().for_each(|o| *o /= len as f64);
        }
    }
    v
}

/// Numerically stable softmax of each row.
pub fn softmax_rows(x: &Matrix) -> Matrix {
    let mut v = x.clone();
    for r in 0..v.rows() {
        let row = v.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for y in row.iter_mut() {
            *y = math::exp(*y - max);
            total += *y;
        }
        row.iter_mut().for_each(|y| *y /= total);
    }
    v
}

/// Row-wise one-hot of the argmax, ties to the lowest index.
pub fn one_hot_rows(x: &Matrix) -> Matrix {
    let mut v = Matrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        if x.cols() > 0 {
            v[(r, math::argmax(x.row(r)))] = 1.0;
        }
    }
    v
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `−y(1−p)^γ log p − (1−y)p^γ log(1−p)` with `p` clamped.
pub fn focal_value(p: f64, y: f64, gamma: f64) -> f64 {
    let p = clamp_prob(p);
    -y * math::powf(1.0 - p, gamma) * math::ln(p)
        - (1.0 - y) * math::powf(p, gamma) * math::ln(1.0 - p)
}

fn focal_derivative(p_raw: f64, y: f64, gamma: f64) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p_raw) {
        return 0.0;
    }
    let p = p_raw;
    let q = 1.0 - p;
    // γ(1−p)^{γ−1} vanishes when γ = 0; avoid 0·∞ at the clamp edges.
    let pos_weight = if gamma == 0.0 { 0.0 } else { gamma * math::powf(q, gamma - 1.0) };
    let neg_weight = if gamma == 0.0 { 0.0 } else { gamma * math::powf(p, gamma - 1.0) };
    let d_pos = pos_weight * math::ln(p) - math::powf(q, gamma) / p;
    let d_neg = -neg_weight * math::ln(q) + math::powf(p, gamma) / q;
    y * d_pos + (1.0 - y) * d_neg
}
