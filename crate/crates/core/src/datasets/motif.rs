use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Graph, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotifKind {
    House,
    Grid,
    Wheel,
}

impl MotifKind {
    pub const ALL: [MotifKind; 3] = [MotifKind::House, MotifKind::Grid, MotifKind::Wheel];

    /// Tag stored in dataset records.
    pub fn tag(self) -> &'static str {
        match self {
            MotifKind::House => "house",
            MotifKind::Grid => "grid",
            MotifKind::Wheel => "wheel",
        }
    }

    /// Label used when annotating explanations.
    pub fn label(self) -> &'static str {
        match self {
            MotifKind::House => "House",
            MotifKind::Grid => "Grid",
            MotifKind::Wheel => "Wheel",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

/// A motif and the template graph that gets planted.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifSpec {
    pub kind: MotifKind,
    pub template: Graph,
}

impl MotifSpec {
    /// Square with a roof apex over the `0-1` side.
    pub fn house() -> Self {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4)];
        Self::build(MotifKind::House, 5, edges.to_vec()).expect("static template")
    }

    /// `side × side` lattice.
    pub fn grid(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::Config("grid side must be at least 2".into()));
        }
        let mut edges = Vec::new();
        for r in 0..side {
            for c in 0..side {
                let v = r * side + c;
                if c + 1 < side {
                    edges.push((v, v + 1));
                }
                if r + 1 < side {
                    edges.push((v, v + side));
                }
            }
        }
        Self::build(MotifKind::Grid, side * side, edges)
    }

    /// Hub `0` joined to every node of a `rim`-cycle.
    pub fn wheel(rim: usize) -> Result<Self> {
        if rim < 3 {
            return Err(Error::Config("wheel rim must have at least 3 nodes".into()));
        }
        let mut edges = Vec::new();
        for k in 1..=rim {
            edges.push((0, k));
            edges.push((k, k % rim + 1));
        }
        Self::build(MotifKind::Wheel, rim + 1, edges)
    }

    /// The default templates: house, 3×3 grid, wheel with six rim nodes.
    pub fn standard() -> Vec<MotifSpec> {
        Self::with_sizes(3, 6).expect("default sizes are valid")
    }

    pub fn with_sizes(grid_side: usize, wheel_rim: usize) -> Result<Vec<MotifSpec>> {
        Ok([Self::house(), Self::grid(grid_side)?, Self::wheel(wheel_rim)?].into())
    }

    fn build(kind: MotifKind, n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Ok(Self {
            kind,
            template: Graph::with_constant_features(n, edges, 1.0)?,
        })
    }
}
