use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::iso::{find_embeddings, is_isomorphic};
use super::motif::{MotifKind, MotifSpec};
use crate::Graph;

/// Motif label of an explanation subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Annotation {
    House,
    Grid,
    Wheel,
    Mix,
    Others,
}

impl Annotation {
    pub const ALL: [Annotation; 5] = [
        Annotation::House,
        Annotation::Grid,
        Annotation::Wheel,
        Annotation::Mix,
        Annotation::Others,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Annotation::House => "House",
            Annotation::Grid => "Grid",
            Annotation::Wheel => "Wheel",
            Annotation::Mix => "Mix",
            Annotation::Others => "Others",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl From<MotifKind> for Annotation {
    fn from(k: MotifKind) -> Self {
        match k {
            MotifKind::House => Annotation::House,
            MotifKind::Grid => Annotation::Grid,
            MotifKind::Wheel => Annotation::Wheel,
        }
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact match against a template gives that motif; two node-disjoint
/// induced template occurrences give `Mix`; anything else is `Others`.
pub fn annotate(sub: &Graph, motifs: &[MotifSpec]) -> Annotation {
    if let Some(m) = motifs.iter().find(|m| is_isomorphic(&m.template, sub)) {
        return m.kind.into();
    }
    if has_disjoint_pair(sub, motifs) {
        Annotation::Mix
    } else {
        Annotation::Others
    }
}

fn has_disjoint_pair(sub: &Graph, motifs: &[MotifSpec]) -> bool {
    let smallest = motifs.iter().map(|m| m.template.node_count()).min().unwrap_or(0);
    if motifs.is_empty() || sub.node_count() < 2 * smallest {
        return false;
    }
    for (i, first) in motifs.iter().enumerate() {
        let sets: BTreeSet<Vec<usize>> = find_embeddings(&first.template, sub, &[], usize::MAX)
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m
            })
            .collect();
        for set in sets {
            let mut forbidden = vec![false; sub.node_count()];
            for &v in &set {
                forbidden[v] = true;
            }
            if motifs[i..]
                .iter()
                .any(|second| !find_embeddings(&second.template, sub, &forbidden, 1).is_empty())
            {
                return true;
            }
        }
    }
    false
}
