use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::model::GlgModel;
use crate::datasets::Annotation;
use crate::metrics::purity;
use crate::{math, Graph, Result};

/// What one prototype stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub prototype: usize,
    /// Indices of the explanations most strongly assigned to the prototype,
    /// strongest first.
    pub nearest: Vec<usize>,
    /// Explanations whose argmax concept is this prototype.
    pub members: usize,
    pub label_counts: BTreeMap<Annotation, usize>,
    /// `None` for an empty cluster.
    pub purity: Option<f64>,
}

pub fn concept_report(model: &GlgModel, explanations: &[(&Graph, Annotation)], top_k: usize) -> Result<Vec<ConceptEntry>> {
    let graphs: Vec<&Graph> = explanations.iter().map(|(g, _)| *g).collect();
    let soft = model.concept_vectors(&graphs)?;
    let m = model.arch.concepts;
    let mut clusters: Vec<Vec<Annotation>> = alloc::vec![Vec::new(); m];
    for (r, (_, label)) in explanations.iter().enumerate() {
        clusters[math::argmax(soft.row(r))].push(*label);
    }
    let mut out = Vec::with_capacity(m);
    for (j, members) in clusters.iter().enumerate() {
        let mut order: Vec<usize> = (0..explanations.len()).collect();
        order.sort_by(|&a, &b| soft[(b, j)].total_cmp(&soft[(a, j)]).then(a.cmp(&b)));
        order.truncate(top_k);
        let mut label_counts = BTreeMap::new();
        for l in members {
            *label_counts.entry(*l).or_insert(0) += 1;
        }
        out.push(ConceptEntry {
            prototype: j,
            nearest: order,
            members: members.len(),
            label_counts,
            purity: purity(members),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glg::GlgArch;

    #[test]
    fn report_covers_every_prototype() {
        let model = GlgModel::new(GlgArch::default(), 0).unwrap();
        let tri = Graph::with_constant_features(3, [(0, 1), (1, 2), (0, 2)], 1.0).unwrap();
        let edge = Graph::with_constant_features(2, [(0, 1)], 1.0).unwrap();
        let items = [(&tri, Annotation::Others), (&edge, Annotation::House), (&tri, Annotation::Others)];
        let rep = concept_report(&model, &items, 5).unwrap();
        assert_eq!(rep.len(), 6);
        assert_eq!(rep.iter().map(|e| e.members).sum::<usize>(), 3);
        for e in &rep {
            assert_eq!(e.nearest.len(), 3);
            assert_eq!(e.purity.is_none(), e.members == 0);
        }
    }
}
