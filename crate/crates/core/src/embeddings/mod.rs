//! Dense word, subword and paragraph vectors trained with negative sampling.
//!
//! All three models share one update: a hidden vector `h` is scored against
//! the output vector of a target word and of `negatives` noise words drawn
//! from the unigram distribution raised to 0.75. The per-pair loss is
//!
//! ```text
//! -ln σ(u_target · h) - Σ_k ln σ(-u_k · h)
//! ```
//!
//! Skip-gram uses the center word's input vector as `h`; the subword model
//! averages the word vector with its character-gram bucket vectors; PV-DM
//! averages the document vector with the context word vectors.
//!
//! Training walks documents in order with a fixed (unshrunk) window and a
//! learning rate decaying linearly from `initial_lr` to `initial_lr / 100`.
//! Single-threaded runs are bit-for-bit reproducible for a given seed.

mod io;
mod pvdm;
mod sgns;
mod subword;

use rand::Rng;
use thiserror::Error;

use crate::linalg::{axpy, dot, log_sigmoid, sigmoid, Matrix};

pub use pvdm::{infer_doc_vector, train_pvdm, DocEmbeddingModel};
pub use sgns::{train_sgns, EmbeddingModel};
pub use subword::{char_ngrams, fnv1a32, train_subword, SubwordEmbeddingModel, SubwordParams};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no documents to train on")]
    NoDocuments,
    #[error("vocabulary has {vocab} words, need at least negatives + 1 = {needed}")]
    VocabularyTooSmall { vocab: usize, needed: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("cannot infer a vector for an empty token sequence")]
    EmptyTokens,
    #[error("training diverged: non-finite values in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
}

/// Hyperparameters shared by all three trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub seed: u64,
    /// Minimum number of documents a word must appear in.
    pub min_count: usize,
}

impl Default for SgnsParams {
    fn default() -> Self {
        SgnsParams { dim: 300, window: 5, negatives: 5, epochs: 30, initial_lr: 0.025, seed: 1, min_count: 1 }
    }
}

impl SgnsParams {
    pub(crate) fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidParam(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives must be positive");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial_lr must be a positive number");
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1");
        }
        Ok(())
    }

    /// Linear decay from `initial_lr` to `initial_lr / 100`.
    pub(crate) fn lr_at(&self, progress: f64) -> f64 {
        let floor = self.initial_lr / 100.0;
        self.initial_lr - (self.initial_lr - floor) * progress.clamp(0.0, 1.0)
    }
}

/// Draws noise words with probability proportional to `count^0.75`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    pub fn probability(&self, id: usize) -> f64 {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let prev = if id == 0 { 0.0 } else { self.cumulative[id - 1] };
        (self.cumulative[id] - prev) / total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("sampler over an empty vocabulary");
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

/// Loss and gradients of one negative-sampling term.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub loss: f64,
    pub hidden: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Closed-form loss and gradients for `-ln σ(u_o·h) - Σ ln σ(-u_k·h)`.
pub fn sgns_loss_and_gradients(hidden: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGradients {
    let dim = hidden.len();
    let mut g_hidden = vec![0.0; dim];
    let s = dot(positive, hidden);
    let mut loss = -log_sigmoid(s);
    let coef = sigmoid(s) - 1.0;
    axpy(coef, positive, &mut g_hidden);
    let g_positive = hidden.iter().map(|h| coef * h).collect();
    let mut g_negatives = Vec::with_capacity(negatives.len());
    for u in negatives {
        let s = dot(u, hidden);
        loss -= log_sigmoid(-s);
        let coef = sigmoid(s);
        axpy(coef, u, &mut g_hidden);
        g_negatives.push(hidden.iter().map(|h| coef * h).collect());
    }
    SgnsGradients { loss, hidden: g_hidden, positive: g_positive, negatives: g_negatives }
}

/// One in-place SGD step on the output vectors of `target` and `negatives`.
///
/// Returns the loss and the gradient with respect to `hidden`, computed from
/// the output vectors before they were updated. Negatives equal to the target
/// are skipped.
pub(crate) fn sgns_step(
    hidden: &[f64],
    target: usize,
    negatives: &[usize],
    output: &mut Matrix,
    lr: f64,
    update_output: bool,
) -> (f64, Vec<f64>) {
    let mut g_hidden = vec![0.0; hidden.len()];
    let mut loss = 0.0;
    let mut apply = |word: usize, label: bool, g_hidden: &mut Vec<f64>| {
        let u = output.row_mut(word);
        let s = dot(u, hidden);
        let coef = if label {
            loss -= log_sigmoid(s);
            sigmoid(s) - 1.0
        } else {
            loss -= log_sigmoid(-s);
            sigmoid(s)
        };
        axpy(coef, u, g_hidden);
        if update_output {
            axpy(-lr * coef, hidden, u);
        }
    };
    apply(target, true, &mut g_hidden);
    for &n in negatives {
        if n != target {
            apply(n, false, &mut g_hidden);
        }
    }
    (loss, g_hidden)
}

pub(crate) fn draw_negatives<R: Rng + ?Sized>(sampler: &NegativeSampler, count: usize, rng: &mut R, buf: &mut Vec<usize>) {
    buf.clear();
    buf.extend((0..count).map(|_| sampler.sample(rng)));
}

/// Uniform `(-0.5/dim, 0.5/dim)` initialization.
pub(crate) fn uniform_init<R: Rng + ?Sized>(rows: usize, dim: usize, rng: &mut R) -> Matrix {
    let scale = 1.0 / dim as f64;
    Matrix::from_fn(rows, dim, |_, _| (rng.random::<f64>() - 0.5) * scale)
}

/// Anything that can hand out a vector per word.
pub trait WordVectors {
    fn dim(&self) -> usize;
    fn word_vector(&self, word: &str) -> Option<Vec<f64>>;
}

/// Mean of the available token vectors; the zero vector when none exist.
pub fn average_embedding<M: WordVectors + ?Sized, S: AsRef<str>>(model: &M, tokens: &[S]) -> Vec<f64> {
    let mut acc = vec![0.0; model.dim()];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = model.word_vector(t.as_ref()) {
            axpy(1.0, &v, &mut acc);
            n += 1;
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|x| *x /= n as f64);
    }
    acc
}
