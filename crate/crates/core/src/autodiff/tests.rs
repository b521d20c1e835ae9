use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng as _, SeedableRng};

use super::*;
use crate::rng::Rng;

fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Keeps inputs away from relu/max kinks.
fn away_from_zero(m: Matrix) -> Matrix {
    m.map(|x| if x.abs() < 1e-2 { x.signum() * 0.1 + x } else { x })
}

fn check(f: impl Fn(&mut Tape, Var) -> crate::Result<Var>, x: &Matrix) {
    let report = grad_check(f, x, 1e-4).unwrap();
    assert!(report.passed, "max rel err {}", report.max_rel_error);
}

#[test]
fn sigmoid_at_zero() {
    let mut t = Tape::new();
    let x = t.leaf(Matrix::scalar(0.0));
    let y = t.sigmoid(x);
    assert_eq!(t.value(y).item(), 0.5);
    let g = t.backward(y).unwrap();
    assert_eq!(g.wrt(x).unwrap().item(), 0.25);
}

#[test]
fn softmax_of_zeros_is_uniform() {
    let mut t = Tape::new();
    let x = t.leaf(Matrix::zeros(1, 3));
    let y = t.row_softmax(x);
    for v in t.value(y).data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn squared_euclidean_self_is_zero() {
    let mut t = Tape::new();
    let e = t.leaf(Matrix::row_vector(&[0.3, -1.2, 4.0]));
    let d = t.squared_euclidean(e, e).unwrap();
    assert_eq!(t.value(d).item(), 0.0);
    let g = t.backward(d).unwrap();
    assert!(g.wrt(e).unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn sum_gradient_is_ones() {
    let mut store = ParamStore::new();
    let w = store.add("w", random(2, 2, 1));
    let mut t = Tape::new();
    let wv = t.param(&store, w);
    let s = t.sum_all(wv);
    let g = t.backward(s).unwrap();
    store.accumulate(&t, &g);
    assert_eq!(store.get(w).grad, Matrix::filled(2, 2, 1.0));
    store.zero_grad();
    assert_eq!(store.get(w).grad, Matrix::zeros(2, 2));
}

#[test]
fn squared_euclidean_gradient_is_analytic() {
    let e = Matrix::row_vector(&[1.0, 2.0, -0.5]);
    let p = Matrix::row_vector(&[0.5, -1.0, 0.25]);
    let mut t = Tape::new();
    let ev = t.leaf(e.clone());
    let pv = t.leaf(p.clone());
    let d = t.squared_euclidean(ev, pv).unwrap();
    let g = t.backward(d).unwrap();
    let expect: Vec<f64> = e.data().iter().zip(p.data()).map(|(a, b)| 2.0 * (a - b)).collect();
    assert_eq!(g.wrt(ev).unwrap().data(), &expect[..]);
}

#[test]
fn non_scalar_loss_is_rejected() {
    let mut t = Tape::new();
    let x = t.leaf(Matrix::zeros(2, 1));
    assert!(matches!(t.backward(x), Err(crate::Error::NonScalarLoss((2, 1)))));
}

#[test]
fn shape_mismatch_is_rejected() {
    let mut t = Tape::new();
    let a = t.leaf(Matrix::zeros(2, 3));
    let b = t.leaf(Matrix::zeros(2, 3));
    assert!(t.matmul(a, b).is_err());
    let c = t.leaf(Matrix::zeros(3, 2));
    assert!(t.add(a, c).is_err());
}

#[test]
fn random_three_layer_composite_matches_finite_differences() {
    let w1 = random(4, 5, 10);
    let w2 = random(5, 3, 11);
    let w3 = random(3, 1, 12);
    let x = random(6, 4, 13);
    check(
        |t, x| {
            let (a, b, c) = (t.leaf(w1.clone()), t.leaf(w2.clone()), t.leaf(w3.clone()));
            let h = t.matmul(x, a)?;
            let h = t.leaky_relu(h, 0.01);
            let h = t.matmul(h, b)?;
            let h = t.sigmoid(h);
            let h = t.matmul(h, c)?;
            t.mean_all(h)
        },
        &x,
    );
}

#[test]
fn every_op_passes_grad_check() {
    let x = away_from_zero(random(4, 3, 20));
    let w = random(3, 3, 21);
    let row = random(1, 3, 22);
    let check_unary = |f: &dyn Fn(&mut Tape, Var) -> Var| {
        check(
            |t, x| {
                let y = f(t, x);
                let wv = t.leaf(random(4, 3, 99));
                let y = t.mul(y, wv)?;
                Ok(t.sum_all(y))
            },
            &x,
        );
    };
    check_unary(&|t, x| t.relu(x));
    check_unary(&|t, x| t.leaky_relu(x, 0.01));
    check_unary(&|t, x| t.sigmoid(x));
    check_unary(&|t, x| t.exp(x));
    check_unary(&|t, x| t.row_softmax(x));
    check_unary(&|t, x| t.scale(x, -2.5));
    check_unary(&|t, x| t.add_scalar(x, 3.0));
    check_unary(&|t, x| {
        let a = t.add_scalar(x, 2.0);
        t.log(a)
    });
    check_unary(&|t, x| {
        let y = t.transpose(x);
        t.transpose(y)
    });
    check(
        |t, x| {
            let wv = t.leaf(w.clone());
            let y = t.matmul(x, wv)?;
            Ok(t.sum_all(y))
        },
        &x,
    );
    check(
        |t, x| {
            let r = t.leaf(row.clone());
            let y = t.add_row(x, r)?;
            let y = t.mul(y, y)?;
            Ok(t.sum_all(y))
        },
        &x,
    );
    check(
        |t, x| {
            let y = t.concat_cols(&[x, x])?;
            let y = t.mul(y, y)?;
            t.mean_all(y)
        },
        &x,
    );
    for reduce in 0..3 {
        check(
            |t, x| {
                let y = match reduce {
                    0 => t.sum_rows(x),
                    1 => t.mean_rows(x)?,
                    _ => t.max_rows(x)?,
                };
                let wv = t.leaf(row.clone());
                let y = t.mul(y, wv)?;
                Ok(t.sum_all(y))
            },
            &x,
        );
    }
    check(
        |t, x| {
            let r = t.leaf(row.clone());
            let first = t.max_rows(x)?;
            let y = t.squared_euclidean(first, r)?;
            Ok(y)
        },
        &x,
    );
    let protos = random(2, 3, 23);
    check(
        |t, x| {
            let p = t.leaf(protos.clone());
            let d = t.pairwise_sq_dist(x, p)?;
            let wv = t.leaf(random(4, 2, 24));
            let d = t.mul(d, wv)?;
            Ok(t.sum_all(d))
        },
        &x,
    );
    check(
        |t, p| {
            let e = t.leaf(x.clone());
            let d = t.pairwise_sq_dist(e, p)?;
            let wv = t.leaf(random(4, 3, 25));
            let d = t.mul(d, wv)?;
            Ok(t.sum_all(d))
        },
        &random(3, 3, 26),
    );
    let offsets = Rc::new(vec![0, 1, 1, 4]);
    for kind in 0..3 {
        let offsets = offsets.clone();
        check(
            |t, x| {
                let y = match kind {
                    0 => t.segment_sum(x, offsets.clone())?,
                    1 => t.segment_mean(x, offsets.clone())?,
                    _ => t.segment_max(x, offsets.clone())?,
                };
                let wv = t.leaf(random(3, 3, 27));
                let y = t.mul(y, wv)?;
                Ok(t.sum_all(y))
            },
            &x,
        );
    }
    let sparse = Rc::new(SparseMatrix::from_triplets(
        4,
        4,
        vec![(0, 1, 0.5), (1, 0, 0.5), (2, 3, 2.0), (3, 3, 1.0), (0, 0, -1.0)],
    ));
    check(
        |t, x| {
            let y = t.spmm(sparse.clone(), x)?;
            let y = t.mul(y, y)?;
            Ok(t.sum_all(y))
        },
        &x,
    );
}

#[test]
fn gcn_propagate_grad_check_on_features_and_weights() {
    let graph = Rc::new(EdgeIndex {
        node_count: 4,
        edges: vec![(0, 1), (1, 2), (2, 3), (0, 2)],
    });
    let h = random(4, 2, 30);
    let w = Matrix::from_vec(4, 1, vec![0.3, 0.9, 0.5, 0.7]).unwrap();
    let probe = random(4, 2, 31);
    check(
        |t, wv| {
            let hv = t.leaf(h.clone());
            let y = t.gcn_propagate(graph.clone(), wv, hv)?;
            let pv = t.leaf(probe.clone());
            let y = t.mul(y, pv)?;
            Ok(t.sum_all(y))
        },
        &w,
    );
    check(
        |t, hv| {
            let wv = t.leaf(w.clone());
            let y = t.gcn_propagate(graph.clone(), wv, hv)?;
            let pv = t.leaf(probe.clone());
            let y = t.mul(y, pv)?;
            Ok(t.sum_all(y))
        },
        &h,
    );
}

#[test]
fn focal_bce_passes_grad_check() {
    // p = 0.3, y = 1, γ = 2
    check(|t, p| t.focal_bce(p, &[1.0], 2.0), &Matrix::scalar(0.3));
    check(
        |t, p| t.focal_bce(p, &[1.0, 0.0, 0.0], 2.0),
        &Matrix::from_vec(3, 1, vec![0.2, 0.6, 0.9]).unwrap(),
    );
    check(
        |t, p| t.focal_bce(p, &[0.0, 1.0], 0.0),
        &Matrix::from_vec(2, 1, vec![0.4, 0.7]).unwrap(),
    );
}

#[test]
fn sum_of_squares_passes_tight_check() {
    let report = grad_check(
        |t, x| {
            let y = t.mul(x, x)?;
            Ok(t.sum_all(y))
        },
        &random(3, 3, 40),
        1e-6,
    )
    .unwrap();
    assert!(report.passed, "{}", report.max_rel_error);
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let mut store = ParamStore::new();
    let id = store.add("w", Matrix::row_vector(&[1.0, -2.0, 0.5]));
    store.get_mut(id).grad = Matrix::row_vector(&[0.3, -7.0, 0.0]);
    let mut adam = AdamState::new(AdamConfig::with_lr(0.01), &store, vec![id]);
    adam.step(&mut store);
    let w = store.get(id).value.data().to_vec();
    assert!((w[0] - (1.0 - 0.01)).abs() < 1e-9);
    assert!((w[1] - (-2.0 + 0.01)).abs() < 1e-9);
    // zero gradient leaves the parameter unchanged
    assert_eq!(w[2], 0.5);
    // gradients are left for the caller to clear
    assert_eq!(store.get(id).grad.data()[0], 0.3);
    assert_eq!(adam.step_count(), 1);
}

#[test]
fn adam_without_momentum_takes_normalized_steps() {
    let mut store = ParamStore::new();
    let id = store.add("w", Matrix::scalar(0.0));
    store.get_mut(id).grad = Matrix::scalar(-4.0);
    let cfg = AdamConfig {
        learning_rate: 0.1,
        beta1: 0.0,
        beta2: 0.0,
        eps: 0.0,
    };
    let mut adam = AdamState::new(cfg, &store, vec![id]);
    adam.step(&mut store);
    assert!((store.get(id).value.item() - 0.1).abs() < 1e-15);
    adam.step(&mut store);
    assert!((store.get(id).value.item() - 0.2).abs() < 1e-15);
}

#[test]
fn max_rows_ties_route_to_lowest_index() {
    let mut t = Tape::new();
    let x = t.leaf(Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap());
    let m = t.max_rows(x).unwrap();
    let s = t.sum_all(m);
    let g = t.backward(s).unwrap();
    assert_eq!(g.wrt(x).unwrap().to_rows(), vec![vec![1.0, 1.0], vec![0.0, 0.0]]);
}

#[test]
fn straight_through_backward_equals_soft_path() {
    let x = random(5, 4, 50);
    let w = random(5, 4, 51);
    let grad_of = |hard: bool| {
        let mut t = Tape::new();
        let xv = t.leaf(x.clone());
        let soft = t.row_softmax(xv);
        let out = if hard { t.straight_through(soft) } else { soft };
        if hard {
            assert_eq!(t.value(out), &one_hot_rows(t.value(soft)));
        }
        let wv = t.leaf(w.clone());
        let y = t.mul(out, wv).unwrap();
        let s = t.sum_all(y);
        t.backward(s).unwrap().wrt(xv).unwrap().clone()
    };
    let (st, soft) = (grad_of(true), grad_of(false));
    for (a, b) in st.data().iter().zip(soft.data()) {
        assert!((a - b).abs() <= 1e-10);
    }
}
