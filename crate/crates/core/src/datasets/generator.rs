use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::motif::{MotifKind, MotifSpec};
use crate::rng::{self, stream, Rng};
use crate::{Error, Graph, LabeledGraph, Result, Split};

/// Barabási–Albert preferential attachment, seeded with a clique of
/// `m_attach` nodes. Every new node links to `m_attach` distinct existing
/// nodes drawn proportionally to degree.
pub fn generate_ba(n: usize, m_attach: usize, rng: &mut Rng) -> Result<Graph> {
    if m_attach == 0 || n <= m_attach {
        return Err(Error::Config(alloc::format!(
            "BA graph needs n > m_attach >= 1, got n={n}, m_attach={m_attach}"
        )));
    }
    let mut edges = Vec::with_capacity(m_attach * (n - m_attach) + m_attach * (m_attach - 1) / 2);
    // every node appears once per incident edge
    let mut ends: Vec<usize> = Vec::new();
    for u in 0..m_attach {
        for v in u + 1..m_attach {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    let mut targets = Vec::with_capacity(m_attach);
    for new in m_attach..n {
        targets.clear();
        while targets.len() < m_attach {
            let t = if ends.is_empty() {
                rng.gen_range(0..new)
            } else {
                ends[rng.gen_range(0..ends.len())]
            };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, new));
            ends.extend([t, new]);
        }
    }
    Graph::with_constant_features(n, edges, 1.0)
}

/// Appends `motif` to `base` with one bridge edge from a random motif node
/// to a random base node. Returns the new graph and the motif's node ids.
pub fn attach_motif(base: &Graph, motif: &MotifSpec, rng: &mut Rng) -> Result<(Graph, Vec<usize>)> {
    if base.node_count() == 0 {
        return Err(Error::Empty("base graph"));
    }
    let off = base.node_count();
    let k = motif.template.node_count();
    let anchor = rng.gen_range(0..off);
    let port = off + rng.gen_range(0..k);
    let edges = base
        .edges()
        .iter()
        .copied()
        .chain(motif.template.edges().iter().map(|&(u, v)| (u + off, v + off)))
        .chain([(anchor, port)]);
    let graph = Graph::with_constant_features(off + k, edges, 1.0)?;
    Ok((graph, (off..off + k).collect()))
}

pub fn attach_motifs(base: &Graph, motifs: &[&MotifSpec], rng: &mut Rng) -> Result<(Graph, Vec<Vec<usize>>)> {
    let mut graph = base.clone();
    let mut sets = Vec::with_capacity(motifs.len());
    for m in motifs {
        let (next, nodes) = attach_motif(&graph, m, rng)?;
        graph = next;
        sets.push(nodes);
    }
    Ok((graph, sets))
}

/// Which motifs a graph carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Composition {
    Plain,
    House,
    Grid,
    Wheel,
    All,
    HouseGrid,
    HouseWheel,
    GridWheel,
}

impl Composition {
    /// Table order: ∅, H, G, W, All, H+G, H+W, G+W.
    pub const ALL: [Composition; 8] = [
        Composition::Plain,
        Composition::House,
        Composition::Grid,
        Composition::Wheel,
        Composition::All,
        Composition::HouseGrid,
        Composition::HouseWheel,
        Composition::GridWheel,
    ];
    pub const CLASS0_BALANCED: [Composition; 4] =
        [Composition::Plain, Composition::House, Composition::Grid, Composition::Wheel];
    pub const CLASS1: [Composition; 3] =
        [Composition::HouseGrid, Composition::HouseWheel, Composition::GridWheel];

    pub fn motifs(self) -> &'static [MotifKind] {
        use MotifKind::*;
        match self {
            Composition::Plain => &[],
            Composition::House => &[House],
            Composition::Grid => &[Grid],
            Composition::Wheel => &[Wheel],
            Composition::All => &[House, Grid, Wheel],
            Composition::HouseGrid => &[House, Grid],
            Composition::HouseWheel => &[House, Wheel],
            Composition::GridWheel => &[Grid, Wheel],
        }
    }

    /// Class 1 exactly when two distinct motifs are present.
    pub fn label(self) -> u8 {
        u8::from(self.motifs().len() == 2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Composition::Plain => "∅",
            Composition::House => "H",
            Composition::Grid => "G",
            Composition::Wheel => "W",
            Composition::All => "All",
            Composition::HouseGrid => "H+G",
            Composition::HouseWheel => "H+W",
            Composition::GridWheel => "G+W",
        }
    }

    /// Composition from a record's motif tags, in any order.
    pub fn from_tags<S: AsRef<str>>(tags: &[S]) -> Option<Self> {
        let mut kinds = Vec::with_capacity(tags.len());
        for t in tags {
            kinds.push(MotifKind::parse(t.as_ref())?);
        }
        kinds.sort_unstable();
        if kinds.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Self::ALL.into_iter().find(|c| c.motifs() == kinds.as_slice())
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Proportions of composition groups within each class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMix {
    /// Over ∅, H, G, W.
    pub class0: Vec<f64>,
    /// Over H+G, H+W, G+W.
    pub class1: Vec<f64>,
    /// Share of class-0 training graphs carrying all three motifs. These
    /// never appear in validation or test.
    pub all_train_fraction: f64,
}

impl Default for ClassMix {
    fn default() -> Self {
        Self {
            class0: vec![0.25; 4],
            class1: vec![1.0 / 3.0; 3],
            all_train_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_graphs: usize,
    pub ba_nodes: usize,
    pub ba_attach: usize,
    pub grid_side: usize,
    pub wheel_rim: usize,
    pub seed: u64,
    pub class_mix: ClassMix,
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_graphs: 1000,
            ba_nodes: 40,
            ba_attach: 1,
            grid_side: 3,
            wheel_rim: 6,
            seed: 0,
            class_mix: ClassMix::default(),
            train_fraction: 0.8,
            val_fraction: 0.1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let sums_to_one = |p: &[f64]| (p.iter().sum::<f64>() - 1.0).abs() < 1e-9 && p.iter().all(|&x| x >= 0.0);
        let mix = &self.class_mix;
        if mix.class0.len() != 4 || !sums_to_one(&mix.class0) {
            return Err(Error::Config("class_mix.class0 needs 4 proportions summing to 1".into()));
        }
        if mix.class1.len() != 3 || !sums_to_one(&mix.class1) {
            return Err(Error::Config("class_mix.class1 needs 3 proportions summing to 1".into()));
        }
        if !(0.0..1.0).contains(&mix.all_train_fraction) {
            return Err(Error::Config("class_mix.all_train_fraction must be in [0, 1)".into()));
        }
        let (t, v) = (self.train_fraction, self.val_fraction);
        if !(t > 0.0 && v >= 0.0 && t + v <= 1.0) {
            return Err(Error::Config("split fractions must be positive and sum to at most 1".into()));
        }
        if self.n_graphs < 2 {
            return Err(Error::Config("n_graphs must be at least 2".into()));
        }
        if self.ba_attach == 0 || self.ba_nodes <= self.ba_attach {
            return Err(Error::Config("need ba_nodes > ba_attach >= 1".into()));
        }
        MotifSpec::with_sizes(self.grid_side, self.wheel_rim).map(|_| ())
    }
}

/// One graph to be generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub composition: Composition,
    pub split: Split,
}

/// Splits `n` by proportions, flooring and handing the remainder to the
/// first groups one at a time.
fn apportion(n: usize, props: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = props.iter().map(|p| (p * n as f64 + 1e-9) as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let len = counts.len();
    let mut k = 0;
    while rest > 0 {
        counts[k % len] += 1;
        rest -= 1;
        k += 1;
    }
    counts
}

/// Composition and split of every graph, shuffled into file order.
pub fn layout(cfg: &GeneratorConfig) -> Result<Vec<Slot>> {
    cfg.validate()?;
    let mut slots = Vec::with_capacity(cfg.n_graphs);
    let class_sizes = [cfg.n_graphs - cfg.n_graphs / 2, cfg.n_graphs / 2];
    for (class, &size) in class_sizes.iter().enumerate() {
        let val = (size as f64 * cfg.val_fraction + 1e-9) as usize;
        let test = (size as f64 * (1.0 - cfg.train_fraction - cfg.val_fraction) + 1e-9) as usize;
        let train = size - val - test;
        for (split, count) in [(Split::Train, train), (Split::Val, val), (Split::Test, test)] {
            let (groups, props): (&[Composition], &[f64]) = if class == 0 {
                (&Composition::CLASS0_BALANCED, &cfg.class_mix.class0)
            } else {
                (&Composition::CLASS1, &cfg.class_mix.class1)
            };
            let mut count = count;
            if class == 0 && split == Split::Train {
                let all = (count as f64 * cfg.class_mix.all_train_fraction + 1e-9) as usize;
                slots.extend((0..all).map(|_| Slot {
                    composition: Composition::All,
                    split,
                }));
                count -= all;
            }
            for (&composition, n) in groups.iter().zip(apportion(count, props)) {
                slots.extend((0..n).map(|_| Slot { composition, split }));
            }
        }
    }
    slots.shuffle(&mut rng::rng(cfg.seed, stream::DATASET_LAYOUT, 0));
    Ok(slots)
}

/// Generates graph `index` of the layout. Depends only on the config seed
/// and the index.
pub fn generate_graph(cfg: &GeneratorConfig, motifs: &[MotifSpec], slot: Slot, index: usize) -> Result<LabeledGraph> {
    let mut rng = rng::rng(cfg.seed, stream::DATASET_GRAPH, index as u64);
    let base = generate_ba(cfg.ba_nodes, cfg.ba_attach, &mut rng)?;
    let mut planted: Vec<&MotifSpec> = Vec::new();
    for kind in slot.composition.motifs() {
        let spec = motifs
            .iter()
            .find(|m| m.kind == *kind)
            .ok_or_else(|| Error::Config(alloc::format!("no template for {}", kind.tag())))?;
        planted.push(spec);
    }
    let (graph, motif_nodes) = attach_motifs(&base, &planted, &mut rng)?;
    Ok(LabeledGraph {
        graph,
        label: slot.composition.label(),
        split: slot.split,
        motif_tags: planted.iter().map(|m| String::from(m.kind.tag())).collect(),
        motif_nodes,
    })
}

pub fn generate_bamultishapes(cfg: &GeneratorConfig) -> Result<Vec<LabeledGraph>> {
    let motifs = MotifSpec::with_sizes(cfg.grid_side, cfg.wheel_rim)?;
    layout(cfg)?
        .into_iter()
        .enumerate()
        .map(|(i, slot)| generate_graph(cfg, &motifs, slot, i))
        .collect()
}
