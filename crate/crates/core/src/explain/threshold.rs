use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which edges survive binarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    KeepAll,
    /// Keep edges with weight strictly above the value.
    Above(f64),
}

impl Threshold {
    pub fn keeps(self, w: f64) -> bool {
        match self {
            Threshold::KeepAll => true,
            Threshold::Above(t) => w > t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdRule {
    /// Cut at the first relative drop of at least `drop` in the sorted weights.
    Elbow { drop: f64 },
    /// One global value maximizing edge-level F1 against the planted motifs.
    F1Oracle,
    Fixed { theta: f64 },
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Elbow { drop } if !(drop > 0.0 && drop < 1.0) => {
                Err(Error::Config(format!("elbow drop {drop} not in (0, 1)")))
            }
            ThresholdRule::Fixed { theta } if !theta.is_finite() => {
                Err(Error::Config(String::from("fixed threshold must be finite")))
            }
            _ => Ok(()),
        }
    }
}

/// Sorts weights in decreasing order and returns the first weight whose
/// drop from its predecessor is at least `drop` of the predecessor. Without
/// such a drop every edge is kept.
pub fn elbow_threshold(weights: &[f64], drop: f64) -> Result<Threshold> {
    if weights.is_empty() {
        return Err(Error::Empty("elbow threshold over no weights"));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for pair in sorted.windows(2) {
        let (prev, w) = (pair[0], pair[1]);
        if prev > 0.0 && (prev - w) / prev >= drop {
            return Ok(Threshold::Above(w));
        }
    }
    Ok(Threshold::KeepAll)
}

/// Edge-level micro-F1 when edges with `w ≥ theta` are predicted important.
/// Each sample is `(weights, is_ground_truth)`.
pub fn micro_f1(samples: &[(&[f64], &[bool])], theta: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (w, t) in samples {
        for (&w, &t) in w.iter().zip(t.iter()) {
            match (w >= theta, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
    }
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// F1 at every grid value 0.01, 0.02, …, 0.99.
pub fn f1_threshold_grid(samples: &[(&[f64], &[bool])]) -> Vec<(f64, f64)> {
    (1..100)
        .map(|k| {
            let theta = k as f64 / 100.0;
            (theta, micro_f1(samples, theta))
        })
        .collect()
}

/// The grid value with the best F1, ties going to the smallest.
pub fn f1_threshold(samples: &[(&[f64], &[bool])]) -> Result<f64> {
    for (w, t) in samples {
        if w.len() != t.len() {
            return Err(Error::LengthMismatch {
                left: w.len(),
                right: t.len(),
            });
        }
    }
    if !samples.iter().any(|(_, t)| t.iter().any(|&x| x)) {
        return Err(Error::Empty("ground-truth edges for F1 threshold"));
    }
    let mut best = (0.0, f64::NEG_INFINITY);
    for (theta, f1) in f1_threshold_grid(samples) {
        if f1 > best.1 {
            best = (theta, f1);
        }
    }
    Ok(best.0)
}
