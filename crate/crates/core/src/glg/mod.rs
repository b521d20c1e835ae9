//! Global explanations: local explanations are embedded, assigned to
//! learned prototypes, pooled per graph and fed to a small logic network
//! whose behaviour on the observed concept patterns is read off as one DNF
//! formula per class.

pub mod concepts;
pub mod logic;
mod model;
mod report;
mod train;

pub use concepts::{
    concept_entropy, discretize_st, entropy_tape, pool_concepts, project, project_tape, proto_reg_r1, proto_reg_r2,
    r1_tape, r2_tape, ConceptVector,
    PooledConceptVector, DEFAULT_PROJECTION_EPS,
};
pub use logic::{table_to_dnf, Clause, LogicFormula, PositiveDisplay, TruthTable, IMPLICIT_NEGATION_NOTE};
pub use model::{Elen, Embedder, Forward, GlgArch, GlgModel, GlgSample, SampleBatch, SampleOutput, ELEN_WIDTHS};
pub use report::{concept_report, ConceptEntry};
pub use train::{
    extract_truth_table, formulas_from_table, total_loss, train_glgexplainer, EpochLog, GlgTrainConfig, TrainedGlg,
};
