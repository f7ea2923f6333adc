use rayon::prelude::*;

use crate::autolabel::MultiLabelSet;
use crate::features::SparseVector;

use super::knn::NeighborIndex;
use super::{fit_binary, fit_knn, ClassifierError, FeatureMatrix, KnnModel, LinearConfig, LinearModel, Metric};

/// Per-class learner used inside binary relevance.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseLearner {
    Linear(LinearConfig),
    Knn { k: usize, metric: Metric },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BinaryMember {
    Linear(LinearModel),
    Knn(KnnModel),
    /// Fitted on a class whose bit never varied.
    Constant(bool),
}

impl BinaryMember {
    pub fn predict(&self, x: &SparseVector) -> Result<bool, ClassifierError> {
        Ok(match self {
            BinaryMember::Linear(m) => m.predict(x)? == 1,
            BinaryMember::Knn(m) => m.predict(x)? == 1,
            BinaryMember::Constant(b) => *b,
        })
    }
}

/// One independent binary classifier per class.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRelevanceModel {
    pub class_names: Vec<String>,
    pub members: Vec<BinaryMember>,
}

fn check_sets(x: &FeatureMatrix, y: &[MultiLabelSet], classes: usize) -> Result<(), ClassifierError> {
    if x.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { features: x.len(), labels: y.len() });
    }
    if let Some(bad) = y.iter().find(|s| s.len() != classes) {
        return Err(ClassifierError::LabelOutOfRange { label: bad.len(), classes });
    }
    Ok(())
}

/// Fits class `c` on bit `c` of every target set. Members are fitted
/// concurrently; each is deterministic on its own.
pub fn fit_binary_relevance(
    x: &FeatureMatrix,
    y: &[MultiLabelSet],
    class_names: &[String],
    base: &BaseLearner,
) -> Result<BinaryRelevanceModel, ClassifierError> {
    check_sets(x, y, class_names.len())?;
    let members = (0..class_names.len())
        .into_par_iter()
        .map(|c| {
            let bits: Vec<bool> = y.iter().map(|s| s.contains(c)).collect();
            if bits.iter().all(|&b| b == bits[0]) {
                log::warn!("binary relevance: class {:?} has only {} examples; constant predictor", class_names[c], if bits[0] { "positive" } else { "negative" });
                return Ok(BinaryMember::Constant(bits[0]));
            }
            match base {
                BaseLearner::Linear(cfg) => fit_binary(x, &bits, cfg).map(BinaryMember::Linear),
                BaseLearner::Knn { k, metric } => {
                    let labels: Vec<usize> = bits.iter().map(|&b| usize::from(b)).collect();
                    fit_knn(x.clone(), &labels, *k, *metric).map(BinaryMember::Knn)
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BinaryRelevanceModel { class_names: class_names.to_vec(), members })
}

impl BinaryRelevanceModel {
    /// Bit `c` is member `c`'s decision; the empty set is a valid answer.
    pub fn predict(&self, x: &SparseVector) -> Result<MultiLabelSet, ClassifierError> {
        let bits = self.members.iter().map(|m| m.predict(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(MultiLabelSet::from_bools(&bits))
    }
}

/// Multi-label voting KNN: a class is predicted when more than half of the
/// `k` nearest stored sets contain it.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelKnnModel {
    index: NeighborIndex,
    sets: Vec<MultiLabelSet>,
    k: usize,
}

pub fn fit_multilabel_knn(x: FeatureMatrix, y: &[MultiLabelSet], k: usize, metric: Metric) -> Result<MultiLabelKnnModel, ClassifierError> {
    let classes = y.first().map_or(0, MultiLabelSet::len);
    check_sets(&x, y, classes)?;
    if k == 0 || k > x.len() {
        return Err(ClassifierError::InvalidK { k, n: x.len() });
    }
    Ok(MultiLabelKnnModel { index: NeighborIndex::new(x, metric), sets: y.to_vec(), k })
}

impl MultiLabelKnnModel {
    pub fn predict(&self, q: &SparseVector) -> Result<MultiLabelSet, ClassifierError> {
        let classes = self.sets[0].len();
        let mut votes = vec![0usize; classes];
        for i in self.index.nearest(q, self.k)? {
            for c in self.sets[i].indices() {
                votes[c] += 1;
            }
        }
        Ok(MultiLabelSet::from_bools(&votes.iter().map(|&v| 2 * v > self.k).collect::<Vec<_>>()))
    }
}
