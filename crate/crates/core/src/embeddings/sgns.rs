use crate::features::Vocabulary;
use crate::linalg::{axpy, Matrix};
use crate::preprocess::ProcessedDoc;
use crate::rng::{self, streams};

use super::{draw_negatives, sgns_step, uniform_init, EmbeddingError, NegativeSampler, SgnsParams, WordVectors};

/// Skip-gram word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) vocab: Vocabulary,
    pub(crate) params: SgnsParams,
    pub(crate) input: Matrix,
    pub(crate) output: Matrix,
    pub(crate) sampler: NegativeSampler,
    pub(crate) epoch_losses: Vec<f64>,
}

impl EmbeddingModel {
    /// Builds the vocabulary and the seeded initial tables without training.
    pub(crate) fn initialize(docs: &[ProcessedDoc], params: &SgnsParams) -> Result<Self, EmbeddingError> {
        params.validate()?;
        if docs.is_empty() {
            return Err(EmbeddingError::NoDocuments);
        }
        let vocab = Vocabulary::build(docs, None, params.min_count)?;
        if vocab.len() < params.negatives + 1 {
            return Err(EmbeddingError::VocabularyTooSmall { vocab: vocab.len(), needed: params.negatives + 1 });
        }
        let mut rng = rng::seeded(params.seed, streams::INIT);
        let input = uniform_init(vocab.len(), params.dim, &mut rng);
        let output = Matrix::zeros(vocab.len(), params.dim);
        let sampler = NegativeSampler::new(vocab.total_freqs());
        Ok(EmbeddingModel { vocab, params: params.clone(), input, output, sampler, epoch_losses: Vec::new() })
    }

    pub(crate) fn from_parts(vocab: Vocabulary, params: SgnsParams, input: Matrix, output: Matrix) -> Self {
        let sampler = NegativeSampler::new(vocab.total_freqs());
        EmbeddingModel { vocab, params, input, output, sampler, epoch_losses: Vec::new() }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &SgnsParams {
        &self.params
    }

    pub fn input_vectors(&self) -> &Matrix {
        &self.input
    }

    pub fn output_vectors(&self) -> &Matrix {
        &self.output
    }

    pub fn sampler(&self) -> &NegativeSampler {
        &self.sampler
    }

    /// Mean training loss per (center, context) pair for each epoch run.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.id(word).map(|id| self.input.row(id))
    }

    pub(crate) fn check_finite(&self) -> Result<(), EmbeddingError> {
        if !self.input.is_finite() {
            return Err(EmbeddingError::NonFinite("input vectors"));
        }
        if !self.output.is_finite() {
            return Err(EmbeddingError::NonFinite("output vectors"));
        }
        Ok(())
    }

    /// In-vocabulary ids of each document; out-of-vocabulary tokens are dropped.
    pub(crate) fn encode(&self, docs: &[ProcessedDoc]) -> Vec<Vec<usize>> {
        docs.iter().map(|d| self.vocab.ids(&d.tokens).collect()).collect()
    }
}

impl WordVectors for EmbeddingModel {
    fn dim(&self) -> usize {
        self.params.dim
    }

    fn word_vector(&self, word: &str) -> Option<Vec<f64>> {
        self.vector(word).map(<[f64]>::to_vec)
    }
}

/// Window neighbours of position `i` in a sequence of length `n`.
pub(crate) fn window(i: usize, n: usize, w: usize) -> impl Iterator<Item = usize> {
    (i.saturating_sub(w)..(i + w + 1).min(n)).filter(move |&j| j != i)
}

pub(crate) fn count_pairs(encoded: &[Vec<usize>], w: usize) -> usize {
    encoded.iter().map(|ids| (0..ids.len()).map(|i| window(i, ids.len(), w).count()).sum::<usize>()).sum()
}

/// How the hidden vector of a center word is formed and updated.
pub(crate) trait CenterRule {
    fn hidden(&self, base: &EmbeddingModel, center: usize) -> Vec<f64>;
    fn apply(&mut self, base: &mut EmbeddingModel, center: usize, grad: &[f64], lr: f64);
}

struct WordOnly;

impl CenterRule for WordOnly {
    fn hidden(&self, base: &EmbeddingModel, center: usize) -> Vec<f64> {
        base.input.row(center).to_vec()
    }

    fn apply(&mut self, base: &mut EmbeddingModel, center: usize, grad: &[f64], lr: f64) {
        axpy(-lr, grad, base.input.row_mut(center));
    }
}

pub(crate) fn run_skipgram<C: CenterRule>(
    model: &mut EmbeddingModel,
    encoded: &[Vec<usize>],
    rule: &mut C,
) -> Result<(), EmbeddingError> {
    let params = model.params.clone();
    let total = (count_pairs(encoded, params.window) * params.epochs).max(1);
    let mut rng = rng::seeded(params.seed, streams::TRAIN);
    let mut negs = Vec::with_capacity(params.negatives);
    let mut done = 0usize;
    for epoch in 0..params.epochs {
        let mut epoch_loss = 0.0;
        let mut pairs = 0usize;
        for ids in encoded {
            for (i, &center) in ids.iter().enumerate() {
                for j in window(i, ids.len(), params.window) {
                    let lr = params.lr_at(done as f64 / total as f64);
                    let h = rule.hidden(model, center);
                    draw_negatives(&model.sampler, params.negatives, &mut rng, &mut negs);
                    let (loss, grad) = sgns_step(&h, ids[j], &negs, &mut model.output, lr, true);
                    rule.apply(model, center, &grad, lr);
                    epoch_loss += loss;
                    pairs += 1;
                    done += 1;
                }
            }
        }
        let mean = if pairs == 0 { 0.0 } else { epoch_loss / pairs as f64 };
        log::debug!("sgns epoch {} mean loss {mean:.6}", epoch + 1);
        model.epoch_losses.push(mean);
        model.check_finite()?;
    }
    Ok(())
}

/// Skip-gram with negative sampling over the documents' token sequences.
pub fn train_sgns(docs: &[ProcessedDoc], params: &SgnsParams) -> Result<EmbeddingModel, EmbeddingError> {
    let mut model = EmbeddingModel::initialize(docs, params)?;
    let encoded = model.encode(docs);
    run_skipgram(&mut model, &encoded, &mut WordOnly)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cosine;

    fn doc(id: &str, words: &[&str]) -> ProcessedDoc {
        ProcessedDoc { id: id.into(), tokens: words.iter().map(|w| w.to_string()).collect(), label: None }
    }

    fn small() -> SgnsParams {
        SgnsParams { dim: 16, window: 2, negatives: 3, epochs: 5, initial_lr: 0.05, seed: 7, min_count: 1 }
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let docs = vec![doc("a", &["x", "y", "z", "w", "v"])];
        let p = SgnsParams { epochs: 0, ..small() };
        let trained = train_sgns(&docs, &p).unwrap();
        let init = EmbeddingModel::initialize(&docs, &p).unwrap();
        assert_eq!(trained.input, init.input);
        assert_eq!(trained.output, init.output);
        assert!(trained.input.as_slice().iter().all(|v| v.abs() < 0.5 / 16.0));
    }

    #[test]
    fn vocabulary_too_small() {
        let docs = vec![doc("a", &["x", "y"])];
        let err = train_sgns(&docs, &small()).unwrap_err();
        assert!(matches!(err, EmbeddingError::VocabularyTooSmall { vocab: 2, needed: 4 }));
        assert!(matches!(train_sgns(&[], &small()), Err(EmbeddingError::NoDocuments)));
    }

    #[test]
    fn invalid_params_rejected() {
        let docs = vec![doc("a", &["x", "y", "z", "w"])];
        for p in [
            SgnsParams { dim: 0, ..small() },
            SgnsParams { window: 0, ..small() },
            SgnsParams { negatives: 0, ..small() },
            SgnsParams { initial_lr: f64::NAN, ..small() },
        ] {
            assert!(matches!(train_sgns(&docs, &p), Err(EmbeddingError::InvalidParam(_))));
        }
    }

    #[test]
    fn window_enumeration() {
        assert_eq!(window(0, 5, 2).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(window(2, 5, 2).collect::<Vec<_>>(), [0, 1, 3, 4]);
        assert_eq!(window(4, 5, 1).collect::<Vec<_>>(), [3]);
        assert_eq!(count_pairs(&[vec![0, 1, 2, 3, 4]], 2), 2 + 3 + 4 + 3 + 2);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let docs = vec![doc("a", &["p", "q", "r", "s", "p", "q"]), doc("b", &["r", "s", "t", "p"])];
        let a = train_sgns(&docs, &small()).unwrap();
        let b = train_sgns(&docs, &small()).unwrap();
        assert_eq!(a, b);
        let c = train_sgns(&docs, &SgnsParams { seed: 8, ..small() }).unwrap();
        assert_ne!(a.input, c.input);
    }

    fn two_topic_corpus() -> (Vec<ProcessedDoc>, Vec<String>, Vec<String>) {
        let ta: Vec<String> = (0..10).map(|i| format!("ক{i}")).collect();
        let tb: Vec<String> = (0..10).map(|i| format!("খ{i}")).collect();
        let mut r = rng::seeded(5, 0);
        let mut docs = Vec::new();
        for d in 0..60 {
            let pool = if d % 2 == 0 { &ta } else { &tb };
            let tokens = (0..30).map(|_| pool[rand::Rng::random_range(&mut r, 0..pool.len())].clone()).collect();
            docs.push(ProcessedDoc { id: format!("d{d}"), tokens, label: None });
        }
        (docs, ta, tb)
    }

    #[test]
    fn disjoint_topics_separate() {
        let (docs, ta, tb) = two_topic_corpus();
        let model = train_sgns(&docs, &SgnsParams { dim: 20, epochs: 5, ..small() }).unwrap();
        let mean_cos = |xs: &[String], ys: &[String], same: bool| {
            let mut s = 0.0;
            let mut n = 0;
            for (i, x) in xs.iter().enumerate() {
                for (j, y) in ys.iter().enumerate() {
                    if same && i >= j {
                        continue;
                    }
                    s += cosine(model.vector(x).unwrap(), model.vector(y).unwrap());
                    n += 1;
                }
            }
            s / n as f64
        };
        let intra = (mean_cos(&ta, &ta, true) + mean_cos(&tb, &tb, true)) / 2.0;
        let inter = mean_cos(&ta, &tb, false);
        assert!(intra > inter, "intra {intra} inter {inter}");
        let l = model.epoch_losses();
        assert!(l.last().unwrap() < &l[0]);
    }
}
