use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::concepts::{concept_entropy, entropy_tape, r1_tape, r2_tape};
use super::logic::{table_to_dnf, LogicFormula, TruthTable};
use super::model::{GlgArch, GlgModel, GlgSample, SampleBatch, SampleOutput};
use crate::autodiff::{focal_value, AdamConfig, AdamState, Matrix, Tape};
use crate::metrics::{fidelity, formula_accuracy};
use crate::rng::{self, stream};
use crate::{Error, Result, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlgTrainConfig {
    pub concepts: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub projection_eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub lr_embed: f64,
    pub lr_elen: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub discretize: bool,
    /// Logic-network outputs above this are class 1.
    pub elen_threshold: f64,
    /// Weight of a mean concept-entropy penalty; 0 disables it.
    pub concept_entropy_coef: f64,
    pub seed: u64,
}

impl Default for GlgTrainConfig {
    fn default() -> Self {
        Self {
            concepts: 6,
            embed_dim: 10,
            hidden: 20,
            projection_eps: super::concepts::DEFAULT_PROJECTION_EPS,
            lambda1: 0.09,
            lambda2: 0.00099,
            gamma: 2.0,
            batch_size: 128,
            lr_embed: 1e-3,
            lr_elen: 5e-4,
            max_epochs: 2000,
            patience: 100,
            discretize: true,
            elen_threshold: 0.5,
            concept_entropy_coef: 0.0,
            seed: 0,
        }
    }
}

impl GlgTrainConfig {
    pub fn arch(&self, in_dim: usize) -> GlgArch {
        GlgArch {
            in_dim,
            hidden: self.hidden,
            embed_dim: self.embed_dim,
            concepts: self.concepts,
            projection_eps: self.projection_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0 && self.gamma >= 0.0 && self.concept_entropy_coef >= 0.0) {
            return Err(Error::Config("lambda1, lambda2, gamma and concept_entropy_coef must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.lr_embed > 0.0 && self.lr_elen > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.elen_threshold) {
            return Err(Error::Config("elen_threshold must be in [0, 1)".into()));
        }
        self.arch(1).validate()
    }
}

/// `L_surr + λ1 R1 + λ2 R2`.
pub fn total_loss(surrogate: f64, r1: f64, r2: f64, cfg: &GlgTrainConfig) -> f64 {
    surrogate + cfg.lambda1 * r1 + cfg.lambda2 * r2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub train_fidelity: f64,
    pub val_fidelity: f64,
    /// Mean entropy of the concept vectors as fed to pooling, on train.
    pub entropy: f64,
    /// Raw formulas read on train, scored on train against the explained
    /// model.
    pub formula_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGlg {
    pub model: GlgModel,
    pub config: GlgTrainConfig,
    pub best_epoch: Option<usize>,
    /// Optimizer steps taken up to the kept snapshot.
    pub steps: u64,
    pub best_val_fidelity: f64,
    pub log: Vec<EpochLog>,
}

/// Distinct `(pooled bits, predicted class)` rows over samples that have
/// explanations.
pub fn extract_truth_table(outputs: &[SampleOutput], concepts: usize) -> Result<TruthTable> {
    let mut t = TruthTable::new(concepts);
    for o in outputs {
        if let (Some(bits), Some(class)) = (&o.bits, o.class) {
            t.insert(bits.clone(), class)?;
        }
    }
    Ok(t)
}

/// Raw DNF for class 0 and class 1.
pub fn formulas_from_table(table: &TruthTable) -> [LogicFormula; 2] {
    [table_to_dnf(table, 0), table_to_dnf(table, 1)]
}

fn split_refs(samples: &[GlgSample], split: Split) -> Vec<&GlgSample> {
    samples.iter().filter(|s| s.split == split).collect()
}

fn classes(outputs: &[SampleOutput]) -> Vec<Option<u8>> {
    outputs.iter().map(|o| o.class).collect()
}

fn targets(samples: &[&GlgSample]) -> Vec<u8> {
    samples.iter().map(|s| s.target).collect()
}

fn bits(outputs: &[SampleOutput]) -> Vec<Option<Vec<bool>>> {
    outputs.iter().map(|o| o.bits.clone()).collect()
}

/// Mean surrogate loss on samples with explanations; used to break ties
/// between epochs with equal validation fidelity.
fn surrogate_value(samples: &[&GlgSample], outputs: &[SampleOutput], gamma: f64) -> f64 {
    let vals: Vec<f64> = samples
        .iter()
        .zip(outputs)
        .filter_map(|(s, o)| o.probability.map(|p| focal_value(p, f64::from(s.target), gamma)))
        .collect();
    if vals.is_empty() {
        f64::INFINITY
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Trains embedder, prototypes and logic network end to end against the
/// explained model's predictions, keeping the epoch with the best
/// validation fidelity (lower validation loss breaks ties) and stopping
/// after `patience` epochs without improvement.
pub fn train_glgexplainer(samples: &[GlgSample], cfg: &GlgTrainConfig) -> Result<TrainedGlg> {
    cfg.validate()?;
    let train_all = split_refs(samples, Split::Train);
    let val = split_refs(samples, Split::Val);
    let train: Vec<&GlgSample> = train_all.iter().copied().filter(|s| !s.explanations.is_empty()).collect();
    if train.is_empty() {
        return Err(Error::Empty("training samples with explanations"));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation samples"));
    }
    let in_dim = train[0].explanations[0].feature_dim();
    let mut model = GlgModel::new(cfg.arch(in_dim), cfg.seed)?;
    let (embed_ids, elen_ids) = model.param_groups();
    let mut opt_embed = AdamState::new(AdamConfig::with_lr(cfg.lr_embed), &model.store, embed_ids);
    let mut opt_elen = AdamState::new(AdamConfig::with_lr(cfg.lr_elen), &model.store, elen_ids);

    let val_targets = targets(&val);
    let train_targets = targets(&train_all);
    let score = |m: &GlgModel| -> Result<(f64, f64)> {
        let out = m.evaluate(&val, cfg.discretize, cfg.elen_threshold)?;
        Ok((fidelity(&classes(&out), &val_targets)?, surrogate_value(&val, &out, cfg.gamma)))
    };
    let mut best = model.clone();
    let (mut best_fid, mut best_loss) = score(&model)?;
    let mut best_epoch = None;
    let mut best_steps = 0;
    let mut since_best = 0;
    let mut log = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng::rng(cfg.seed, stream::GLG_SHUFFLE, epoch as u64));
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch_samples: Vec<&GlgSample> = chunk.iter().map(|&i| train[i]).collect();
            let batch = SampleBatch::new(&batch_samples)?;
            let y: Vec<f64> = batch_samples.iter().map(|s| f64::from(s.target)).collect();
            let mut tape = Tape::new();
            let fwd = model.forward(&mut tape, &batch, cfg.discretize)?;
            let surr = tape.focal_bce(fwd.probability, &y, cfg.gamma)?;
            let r1 = r1_tape(&mut tape, fwd.distances)?;
            let r2 = r2_tape(&mut tape, fwd.distances)?;
            let r1 = tape.scale(r1, cfg.lambda1);
            let r2 = tape.scale(r2, cfg.lambda2);
            let mut loss = tape.add(surr, r1)?;
            loss = tape.add(loss, r2)?;
            if cfg.concept_entropy_coef > 0.0 {
                let h = entropy_tape(&mut tape, fwd.soft)?;
                let h = tape.scale(h, cfg.concept_entropy_coef);
                loss = tape.add(loss, h)?;
            }
            loss_sum += tape.value(loss).item() * chunk.len() as f64;
            let grads = tape.backward(loss)?;
            model.store.zero_grad();
            model.store.accumulate(&tape, &grads);
            opt_embed.step(&mut model.store);
            opt_elen.step(&mut model.store);
        }

        let train_out = model.evaluate(&train_all, cfg.discretize, cfg.elen_threshold)?;
        let table = extract_truth_table(&train_out, cfg.concepts)?;
        let formulas = formulas_from_table(&table);
        let used: Vec<f64> = train_out.iter().flat_map(|o| o.used.iter().flatten().copied()).collect();
        let used = Matrix::from_vec(used.len() / cfg.concepts, cfg.concepts, used)?;
        let (val_fid, val_loss) = score(&model)?;
        log.push(EpochLog {
            epoch,
            loss: loss_sum / train.len() as f64,
            train_fidelity: fidelity(&classes(&train_out), &train_targets)?,
            val_fidelity: val_fid,
            entropy: concept_entropy(&used),
            formula_accuracy: formula_accuracy(&formulas, &bits(&train_out), &train_targets)?,
        });
        if val_fid > best_fid || (val_fid == best_fid && val_loss < best_loss) {
            best_fid = val_fid;
            best_loss = val_loss;
            best = model.clone();
            best_epoch = Some(epoch);
            best_steps = opt_embed.step_count();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok(TrainedGlg {
        model: best,
        config: *cfg,
        best_epoch,
        steps: best_steps,
        best_val_fidelity: best_fid,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Matrix;
    use crate::Graph;
    use alloc::vec;

    #[test]
    fn total_loss_examples() {
        let cfg = GlgTrainConfig::default();
        assert!((total_loss(0.1, 2.0, 1.0, &cfg) - 0.28099).abs() < 1e-15);
        let off = GlgTrainConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            ..cfg
        };
        assert_eq!(total_loss(0.3, 7.0, 9.0, &off), 0.3);
    }

    fn cycle(n: usize) -> Graph {
        Graph::with_constant_features(n, (0..n).map(|i| (i, (i + 1) % n)), 1.0).unwrap()
    }

    fn path(n: usize) -> Graph {
        Graph::with_constant_features(n, (1..n).map(|i| (i - 1, i)), 1.0).unwrap()
    }

    /// Class 1 iff both a triangle and a 6-cycle are present.
    fn toy_samples() -> Vec<GlgSample> {
        let mut out = Vec::new();
        for i in 0..120 {
            let kind = i % 4;
            let explanations = match kind {
                0 => vec![cycle(3)],
                1 => vec![cycle(6)],
                2 => vec![cycle(3), cycle(6)],
                _ => vec![path(4)],
            };
            let target = u8::from(kind == 2);
            let split = match i % 10 {
                0 => Split::Val,
                1 => Split::Test,
                _ => Split::Train,
            };
            out.push(GlgSample { graph_id: i, split, target, label: target, explanations, annotations: vec![] });
        }
        out
    }

    fn quick() -> GlgTrainConfig {
        GlgTrainConfig {
            concepts: 4,
            max_epochs: 40,
            batch_size: 32,
            lr_embed: 0.01,
            lr_elen: 0.01,
            ..Default::default()
        }
    }

    #[test]
    fn discretized_training_logs_zero_entropy_and_lossless_formulas() {
        let trained = train_glgexplainer(&toy_samples(), &quick()).unwrap();
        assert_eq!(trained.log.len(), 40);
        for e in &trained.log {
            assert_eq!(e.entropy, 0.0);
            assert_eq!(e.formula_accuracy, e.train_fidelity);
        }
    }

    #[test]
    fn soft_training_has_positive_entropy() {
        let cfg = GlgTrainConfig {
            discretize: false,
            max_epochs: 3,
            ..quick()
        };
        let trained = train_glgexplainer(&toy_samples(), &cfg).unwrap();
        assert!(trained.log[0].entropy > 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = GlgTrainConfig { max_epochs: 5, ..quick() };
        let a = train_glgexplainer(&toy_samples(), &cfg).unwrap();
        let b = train_glgexplainer(&toy_samples(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let cfg = GlgTrainConfig { max_epochs: 0, ..quick() };
        let trained = train_glgexplainer(&toy_samples(), &cfg).unwrap();
        assert_eq!(trained.model, GlgModel::new(cfg.arch(1), cfg.seed).unwrap());
        assert!(trained.log.is_empty());
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(train_glgexplainer(&[], &quick()).is_err());
        let mut s = toy_samples();
        s.retain(|x| x.split != Split::Val);
        assert!(train_glgexplainer(&s, &quick()).is_err());
    }

    #[test]
    fn first_step_reduces_prototype_regularizers() {
        // fixed embeddings, prototypes alone follow the gradient of R1 + R2
        let e = Matrix::from_rows(&[vec![0.1, 0.9], vec![0.8, 0.2], vec![1.5, 1.5], vec![0.0, 0.0]]).unwrap();
        let mut store = crate::autodiff::ParamStore::new();
        let p0 = Matrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.1], vec![0.9, 0.4]]).unwrap();
        let pid = store.add("p", p0);
        let eval = |store: &crate::autodiff::ParamStore| {
            let mut t = Tape::new();
            let ev = t.leaf(e.clone());
            let pv = t.param(store, pid);
            let d = t.pairwise_sq_dist(ev, pv).unwrap();
            let a = r1_tape(&mut t, d).unwrap();
            let b = r2_tape(&mut t, d).unwrap();
            let a = t.scale(a, 0.09);
            let b = t.scale(b, 0.00099);
            let l = t.add(a, b).unwrap();
            (t.value(l).item(), t.backward(l).unwrap(), t)
        };
        let (before, grads, tape) = eval(&store);
        store.accumulate(&tape, &grads);
        let mut adam = AdamState::new(AdamConfig::default(), &store, vec![pid]);
        adam.step(&mut store);
        let (after, _, _) = eval(&store);
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn truth_table_from_outputs() {
        let out = |bits: Option<Vec<bool>>, class: Option<u8>| SampleOutput {
            graph_id: 0,
            bits,
            probability: class.map(f64::from),
            class,
            soft: vec![],
            used: vec![],
        };
        let outs = [
            out(Some(vec![true, false]), Some(1)),
            out(Some(vec![true, false]), Some(1)),
            out(None, None),
        ];
        let t = extract_truth_table(&outs, 2).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(formulas_from_table(&t)[1].display_raw(), "P0 ∧ ¬P1");
    }
}
