use crate::features::SparseVector;

use super::{check_dim, ClassifierError, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(ClassifierError::InvalidParam(format!("unknown metric {other:?}"))),
        }
    }
}

/// Distance-ranked neighbour search over stored rows.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NeighborIndex {
    pub(crate) x: FeatureMatrix,
    norms: Vec<f64>,
    pub(crate) metric: Metric,
}

impl NeighborIndex {
    pub(crate) fn new(x: FeatureMatrix, metric: Metric) -> Self {
        let norms = x.rows().iter().map(SparseVector::norm).collect();
        NeighborIndex { x, norms, metric }
    }

    fn distance(&self, i: usize, q: &SparseVector, q_norm: f64) -> f64 {
        let d = self.x.row(i).dot(q);
        match self.metric {
            Metric::Cosine => {
                let denom = self.norms[i] * q_norm;
                1.0 - if denom > 0.0 { d / denom } else { 0.0 }
            }
            Metric::Euclidean => (self.norms[i] * self.norms[i] + q_norm * q_norm - 2.0 * d).max(0.0),
        }
    }

    /// Indices of the `k` nearest rows; equal distances go to the lower index.
    pub(crate) fn nearest(&self, q: &SparseVector, k: usize) -> Result<Vec<usize>, ClassifierError> {
        check_dim(q, self.x.dim())?;
        let q_norm = q.norm();
        let mut d: Vec<(f64, usize)> = (0..self.x.len()).map(|i| (self.distance(i, q, q_norm), i)).collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, by_rank);
            d.truncate(k);
        }
        d.sort_by(by_rank);
        Ok(d.into_iter().map(|(_, i)| i).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub(crate) index: NeighborIndex,
    pub(crate) labels: Vec<usize>,
    pub(crate) num_classes: usize,
    pub(crate) k: usize,
}

pub fn fit_knn(x: FeatureMatrix, y: &[usize], k: usize, metric: Metric) -> Result<KnnModel, ClassifierError> {
    if x.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { features: x.len(), labels: y.len() });
    }
    if k == 0 || k > x.len() {
        return Err(ClassifierError::InvalidK { k, n: x.len() });
    }
    let num_classes = y.iter().max().map_or(0, |m| m + 1);
    Ok(KnnModel { index: NeighborIndex::new(x, metric), labels: y.to_vec(), num_classes, k })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.index.metric
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.index.x.dim()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Majority label of the `k` nearest stored rows; vote ties go to the
    /// smallest class id.
    pub fn predict(&self, q: &SparseVector) -> Result<usize, ClassifierError> {
        let mut votes = vec![0usize; self.num_classes];
        for i in self.index.nearest(q, self.k)? {
            votes[self.labels[i]] += 1;
        }
        let best = *votes.iter().max().expect("at least one class");
        Ok(votes.iter().position(|&v| v == best).expect("max exists"))
    }
}
