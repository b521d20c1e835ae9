//! Prototype projection, discretization and pooling of concept vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Matrix, Tape, Var};
use crate::{math, Error, Result};

/// Default `ε` in the distance-to-similarity map.
pub const DEFAULT_PROJECTION_EPS: f64 = 1e-4;

/// Soft assignment of one explanation to the prototypes and its argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptVector {
    pub soft: Vec<f64>,
    pub hard: Vec<f64>,
}

/// Multi-hot summary of the concepts found in one graph's explanations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PooledConceptVector {
    pub bits: Vec<bool>,
    /// Set when the graph had no explanations to pool.
    pub no_explanation: bool,
}

/// `log((‖e − p‖² + 1) / (‖e − p‖² + ε))` per prototype, softmaxed.
pub fn project(e: &[f64], prototypes: &Matrix, eps: f64) -> Result<ConceptVector> {
    if e.len() != prototypes.cols() {
        return Err(Error::Shape {
            op: "project",
            lhs: (1, e.len()),
            rhs: prototypes.shape(),
        });
    }
    let scores: Vec<f64> = (0..prototypes.rows())
        .map(|j| {
            let d: f64 = e.iter().zip(prototypes.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            math::ln((d + 1.0) / (d + eps))
        })
        .collect();
    let soft = crate::autodiff::softmax_rows(&Matrix::row_vector(&scores)).into_data();
    let mut hard = vec![0.0; soft.len()];
    if !soft.is_empty() {
        hard[math::argmax(&soft)] = 1.0;
    }
    Ok(ConceptVector { soft, hard })
}

/// Tape version of [`project`] for `e: n × d`, `p: m × d`. Also returns the
/// squared distances, which the prototype regularizers reuse.
pub fn project_tape(tape: &mut Tape, e: Var, p: Var, eps: f64) -> Result<(Var, Var)> {
    let dist = tape.pairwise_sq_dist(e, p)?;
    let num = tape.add_scalar(dist, 1.0);
    let num = tape.log(num);
    let den = tape.add_scalar(dist, eps);
    let den = tape.log(den);
    let scores = tape.sub(num, den)?;
    Ok((tape.row_softmax(scores), dist))
}

/// Forward one-hot, backward identity.
pub fn discretize_st(tape: &mut Tape, soft: Var) -> Var {
    tape.straight_through(soft)
}

/// Elementwise max of one-hot vectors of length `m`.
pub fn pool_concepts(vs: &[Vec<f64>], m: usize) -> Result<PooledConceptVector> {
    let mut bits = vec![false; m];
    for v in vs {
        if v.len() != m {
            return Err(Error::LengthMismatch { left: v.len(), right: m });
        }
        for (b, &x) in bits.iter_mut().zip(v) {
            *b |= x > 0.5;
        }
    }
    Ok(PooledConceptVector {
        bits,
        no_explanation: vs.is_empty(),
    })
}

/// Mean entropy `−Σ v ln v` of the rows of `v`, with `0 ln 0 = 0`.
pub fn concept_entropy(v: &Matrix) -> f64 {
    if v.rows() == 0 {
        return 0.0;
    }
    let total: f64 = (0..v.rows())
        .map(|r| v.row(r).iter().filter(|&&x| x > 0.0).map(|&x| -x * math::ln(x)).sum::<f64>())
        .sum();
    // one-hot rows give -0.0; report it as 0
    total / v.rows() as f64 + 0.0
}

fn sq_dists(p: &Matrix, e: &Matrix) -> Result<Matrix> {
    if p.cols() != e.cols() {
        return Err(Error::Shape {
            op: "prototype distance",
            lhs: p.shape(),
            rhs: e.shape(),
        });
    }
    let mut d = Matrix::zeros(p.rows(), e.rows());
    for j in 0..p.rows() {
        for i in 0..e.rows() {
            d[(j, i)] = p.row(j).iter().zip(e.row(i)).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    Ok(d)
}

/// Mean over prototypes of the squared distance to the nearest embedding.
pub fn proto_reg_r1(prototypes: &Matrix, embeddings: &Matrix) -> Result<f64> {
    if embeddings.rows() == 0 || prototypes.rows() == 0 {
        return Err(Error::Empty("prototype regularizer"));
    }
    let d = sq_dists(prototypes, embeddings)?;
    let total: f64 = (0..d.rows()).map(|j| d.row(j).iter().copied().fold(f64::INFINITY, f64::min)).sum();
    Ok(total / d.rows() as f64)
}

/// Mean over embeddings of the squared distance to the nearest prototype.
pub fn proto_reg_r2(prototypes: &Matrix, embeddings: &Matrix) -> Result<f64> {
    proto_reg_r1(embeddings, prototypes)
}

/// R1 from an `n × m` squared-distance value on the tape.
pub fn r1_tape(tape: &mut Tape, dist: Var) -> Result<Var> {
    let neg = tape.scale(dist, -1.0);
    let col_max = tape.max_rows(neg)?;
    let m = tape.mean_all(col_max)?;
    Ok(tape.scale(m, -1.0))
}

/// R2 from an `n × m` squared-distance value on the tape.
pub fn r2_tape(tape: &mut Tape, dist: Var) -> Result<Var> {
    let neg = tape.scale(dist, -1.0);
    let t = tape.transpose(neg);
    let row_max = tape.max_rows(t)?;
    let m = tape.mean_all(row_max)?;
    Ok(tape.scale(m, -1.0))
}

/// Mean row entropy on the tape; rows must be strictly positive.
pub fn entropy_tape(tape: &mut Tape, v: Var) -> Result<Var> {
    let logv = tape.log(v);
    let prod = tape.mul(v, logv)?;
    let s = tape.sum_all(prod);
    let rows = tape.value(v).rows().max(1) as f64;
    Ok(tape.scale(s, -1.0 / rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let p = Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let v = project(&[0.0, 0.0], &p, DEFAULT_PROJECTION_EPS).unwrap();
        assert_eq!(v.soft, vec![0.5, 0.5]);
        assert_eq!(v.hard, vec![1.0, 0.0]);

        let p3 = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let v = project(&[0.0, 0.0], &p3, DEFAULT_PROJECTION_EPS).unwrap();
        assert!(v.soft.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));

        // exact hit on p1, unit squared distance to p2
        let p = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let v = project(&[0.0, 0.0], &p, 1e-4).unwrap();
        let s1 = (1.0f64 / 1e-4).ln();
        let s2 = (2.0f64 / 1.0001).ln();
        assert!((s1 - 9.2103).abs() < 1e-4 && (s2 - 0.6931).abs() < 1e-4);
        let expected = 1.0 / (1.0 + (s2 - s1).exp());
        assert!((v.soft[0] - expected).abs() < 1e-12);
        assert!((v.soft[0] - 0.99980).abs() < 1e-5);
    }

    #[test]
    fn projection_tape_matches_plain() {
        let e = Matrix::from_rows(&[vec![0.3, -0.2], vec![1.0, 2.0]]).unwrap();
        let p = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.5], vec![0.3, -0.2]]).unwrap();
        let mut t = Tape::new();
        let (ev, pv) = (t.leaf(e.clone()), t.leaf(p.clone()));
        let (soft, _) = project_tape(&mut t, ev, pv, 1e-4).unwrap();
        for r in 0..2 {
            let plain = project(e.row(r), &p, 1e-4).unwrap();
            for (a, b) in t.value(soft).row(r).iter().zip(&plain.soft) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn projection_gradients() {
        let p = Matrix::from_rows(&[vec![0.1, 0.4], vec![0.9, 0.2], vec![0.5, 0.5]]).unwrap();
        let e = Matrix::from_rows(&[vec![0.3, -0.2], vec![0.7, 0.6]]).unwrap();
        let weights = Matrix::from_rows(&[vec![0.2, -1.0, 0.5], vec![1.5, 0.3, -0.7]]).unwrap();
        let loss = |t: &mut Tape, soft: Var| -> Result<Var> {
            let w = t.leaf(weights.clone());
            let prod = t.mul(soft, w)?;
            Ok(t.sum_all(prod))
        };
        let wrt_e = grad_check(
            |t, x| {
                let pv = t.leaf(p.clone());
                let (s, _) = project_tape(t, x, pv, 1e-4)?;
                loss(t, s)
            },
            &e,
            1e-4,
        )
        .unwrap();
        assert!(wrt_e.passed, "{wrt_e:?}");
        let wrt_p = grad_check(
            |t, x| {
                let ev = t.leaf(e.clone());
                let (s, _) = project_tape(t, ev, x, 1e-4)?;
                loss(t, s)
            },
            &p,
            1e-4,
        )
        .unwrap();
        assert!(wrt_p.passed, "{wrt_p:?}");
    }

    #[test]
    fn regularizer_gradients() {
        let p = Matrix::from_rows(&[vec![0.1, 0.35], vec![0.9, 0.2], vec![0.5, 0.7]]).unwrap();
        let e = Matrix::from_rows(&[vec![0.3, -0.2], vec![0.7, 0.6], vec![2.0, 1.0], vec![-0.5, 0.1]]).unwrap();
        for reg in [r1_tape, r2_tape] {
            let rep = grad_check(
                |t, x| {
                    let pv = t.leaf(p.clone());
                    let d = t.pairwise_sq_dist(x, pv)?;
                    reg(t, d)
                },
                &e,
                1e-4,
            )
            .unwrap();
            assert!(rep.passed, "{rep:?}");
        }
        let rep = grad_check(
            |t, x| {
                let pv = t.leaf(p.clone());
                let (s, _) = project_tape(t, x, pv, 1e-4)?;
                entropy_tape(t, s)
            },
            &e,
            1e-4,
        )
        .unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn discretization_examples() {
        let mut t = Tape::new();
        let v = t.leaf(Matrix::from_rows(&[vec![0.7, 0.3], vec![0.5, 0.5]]).unwrap());
        let d = discretize_st(&mut t, v);
        assert_eq!(t.value(d).to_rows(), vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn pooling_examples() {
        let p = pool_concepts(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]], 3).unwrap();
        assert_eq!(p.bits, vec![true, false, true]);
        assert!(!p.no_explanation);
        let one = pool_concepts(&[vec![0.0, 1.0, 0.0]], 3).unwrap();
        assert_eq!(one.bits, vec![false, true, false]);
        let none = pool_concepts(&[], 3).unwrap();
        assert_eq!(none.bits, vec![false; 3]);
        assert!(none.no_explanation);
        assert!(pool_concepts(&[vec![1.0]], 3).is_err());
    }

    #[test]
    fn regularizer_examples() {
        let e = Matrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(proto_reg_r1(&e, &e).unwrap(), 0.0);
        let p = Matrix::row_vector(&[2.0, 0.0]);
        assert_eq!(proto_reg_r1(&p, &Matrix::row_vector(&[0.0, 0.0])).unwrap(), 4.0);
        // prototype minimum squared distances 1 and 4
        let p2 = Matrix::from_rows(&[vec![1.0, 0.0], vec![5.0, 0.0]]).unwrap();
        assert_eq!(proto_reg_r1(&p2, &e).unwrap(), 2.5);
        // embedding minimum squared distances 0 and 9
        let p = Matrix::row_vector(&[0.0, 0.0]);
        assert_eq!(proto_reg_r2(&p, &e).unwrap(), 4.5);
        let dup = Matrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(proto_reg_r2(&p, &dup).unwrap(), 6.0);
        assert!(proto_reg_r1(&p, &Matrix::zeros(0, 2)).is_err());

        let mut t = Tape::new();
        let (ev, pv) = (t.leaf(e.clone()), t.leaf(p2.clone()));
        let d = t.pairwise_sq_dist(ev, pv).unwrap();
        let r1 = r1_tape(&mut t, d).unwrap();
        let r2 = r2_tape(&mut t, d).unwrap();
        assert_eq!(t.value(r1).item(), 2.5);
        assert_eq!(t.value(r2).item(), proto_reg_r2(&p2, &e).unwrap());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(concept_entropy(&Matrix::row_vector(&[0.0, 1.0, 0.0])), 0.0);
        let u = concept_entropy(&Matrix::row_vector(&[0.25; 4]));
        assert!((u - 4f64.ln()).abs() < 1e-12);
        assert!((concept_entropy(&Matrix::row_vector(&[0.5, 0.5])) - 0.693_147_180_56).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn projection_properties(
            e in proptest::collection::vec(-2.0f64..2.0, 3),
            p in proptest::collection::vec(-2.0f64..2.0, 12),
            shift in -5.0f64..5.0,
            rot in 0usize..4,
        ) {
            let protos = Matrix::from_vec(4, 3, p.clone()).unwrap();
            let v = project(&e, &protos, 1e-4).unwrap();
            prop_assert!((v.soft.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(v.hard.iter().filter(|&&x| x == 1.0).count(), 1);

            let rows: Vec<Vec<f64>> = (0..4).map(|j| protos.row((j + rot) % 4).to_vec()).collect();
            let permuted = project(&e, &Matrix::from_rows(&rows).unwrap(), 1e-4).unwrap();
            for j in 0..4 {
                prop_assert!((permuted.soft[j] - v.soft[(j + rot) % 4]).abs() < 1e-12);
            }

            let shifted_e: Vec<f64> = e.iter().map(|x| x + shift).collect();
            let shifted_p = protos.map(|x| x + shift);
            let moved = project(&shifted_e, &shifted_p, 1e-4).unwrap();
            // translation only perturbs distances by rounding
            let mut sorted = v.soft.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            if sorted[0] - sorted[1] > 1e-9 {
                prop_assert_eq!(math::argmax(&moved.soft), math::argmax(&v.soft));
            }
        }
    }
}
