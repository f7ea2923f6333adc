//! Classical supervised models over sparse feature rows: SGD-trained linear
//! classifiers, k-nearest neighbours and binary relevance for multi-label data.

mod io;
mod knn;
mod linear;
mod multilabel;

use thiserror::Error;

use crate::features::SparseVector;

pub use knn::{fit_knn, KnnModel, Metric};
pub use linear::{fit_binary, fit_linear, softmax_loss_and_grad, LinearConfig, LinearModel, LossKind};
pub use multilabel::{fit_binary_relevance, fit_multilabel_knn, BaseLearner, BinaryMember, BinaryRelevanceModel, MultiLabelKnnModel};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("k = {k} must be between 1 and the {n} stored examples")]
    InvalidK { k: usize, n: usize },
    #[error("hinge-loss models do not produce probabilities")]
    ProbabilitiesUnavailable,
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("training diverged: non-finite weights")]
    NonFinite,
}

/// Rows of sparse features sharing one dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    rows: Vec<SparseVector>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, rows: Vec<SparseVector>) -> Result<Self, ClassifierError> {
        for r in &rows {
            check_dim(r, dim)?;
        }
        Ok(FeatureMatrix { dim, rows })
    }

    /// Dense rows, which must all have the same length.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, ClassifierError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(ClassifierError::DimensionMismatch { expected: dim, found: bad.len() });
        }
        Ok(FeatureMatrix { dim, rows: rows.iter().map(|r| SparseVector::from_dense(r)).collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &SparseVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }
}

pub(crate) fn check_dim(x: &SparseVector, dim: usize) -> Result<(), ClassifierError> {
    match x.indices.last() {
        Some(&i) if i >= dim => Err(ClassifierError::DimensionMismatch { expected: dim, found: i + 1 }),
        _ => Ok(()),
    }
}
