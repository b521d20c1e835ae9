//! The BAMultiShapes benchmark and motif annotation of explanation
//! subgraphs.

mod annotate;
mod generator;
mod iso;
mod motif;

pub use annotate::{annotate, Annotation};
pub use generator::{
    attach_motif, attach_motifs, generate_ba, generate_bamultishapes, generate_graph, layout,
    ClassMix, Composition, GeneratorConfig, Slot,
};
pub use iso::{find_embeddings, is_isomorphic};
pub use motif::{MotifKind, MotifSpec};
