use std::collections::HashMap;

use crate::linalg::{axpy, Matrix};
use crate::preprocess::ProcessedDoc;
use crate::rng::{self, streams};

use super::sgns::{window, EmbeddingModel};
use super::{draw_negatives, sgns_step, uniform_init, EmbeddingError, SgnsParams, WordVectors};

/// Word vectors trained jointly with one paragraph vector per training document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbeddingModel {
    pub(crate) base: EmbeddingModel,
    pub(crate) doc_ids: Vec<String>,
    pub(crate) doc_index: HashMap<String, usize>,
    pub(crate) doc_vectors: Matrix,
}

impl DocEmbeddingModel {
    pub(crate) fn from_parts(base: EmbeddingModel, doc_ids: Vec<String>, doc_vectors: Matrix) -> Self {
        let doc_index = doc_ids.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();
        DocEmbeddingModel { base, doc_ids, doc_index, doc_vectors }
    }

    pub fn base(&self) -> &EmbeddingModel {
        &self.base
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_vectors(&self) -> &Matrix {
        &self.doc_vectors
    }

    pub fn doc_vector(&self, id: &str) -> Option<&[f64]> {
        self.doc_index.get(id).map(|&i| self.doc_vectors.row(i))
    }
}

impl WordVectors for DocEmbeddingModel {
    fn dim(&self) -> usize {
        self.base.params.dim
    }

    fn word_vector(&self, word: &str) -> Option<Vec<f64>> {
        self.base.word_vector(word)
    }
}

/// Mean of the document vector and the context word vectors around `i`.
fn hidden(doc: &[f64], input: &Matrix, ids: &[usize], i: usize, w: usize) -> (Vec<f64>, Vec<usize>) {
    let ctx: Vec<usize> = window(i, ids.len(), w).map(|j| ids[j]).collect();
    let mut h = doc.to_vec();
    for &c in &ctx {
        axpy(1.0, input.row(c), &mut h);
    }
    if !ctx.is_empty() {
        let n = (ctx.len() + 1) as f64;
        h.iter_mut().for_each(|x| *x /= n);
    }
    (h, ctx)
}

/// Distributed-memory paragraph vectors with negative sampling.
pub fn train_pvdm(docs: &[ProcessedDoc], params: &SgnsParams) -> Result<DocEmbeddingModel, EmbeddingError> {
    let mut base = EmbeddingModel::initialize(docs, params)?;
    let doc_ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    let mut seen = HashMap::with_capacity(doc_ids.len());
    for (i, id) in doc_ids.iter().enumerate() {
        if seen.insert(id.as_str(), i).is_some() {
            return Err(EmbeddingError::InvalidParam(format!("duplicate document id {id:?}")));
        }
    }
    let mut doc_vectors = uniform_init(docs.len(), params.dim, &mut rng::seeded(params.seed, streams::DOC_INIT));
    let encoded = base.encode(docs);
    let total = (encoded.iter().map(Vec::len).sum::<usize>() * params.epochs).max(1);
    let mut rng = rng::seeded(params.seed, streams::TRAIN);
    let mut negs = Vec::with_capacity(params.negatives);
    let mut done = 0usize;
    for epoch in 0..params.epochs {
        let mut epoch_loss = 0.0;
        let mut steps = 0usize;
        for (d, ids) in encoded.iter().enumerate() {
            for (i, &center) in ids.iter().enumerate() {
                let lr = params.lr_at(done as f64 / total as f64);
                let (h, ctx) = hidden(doc_vectors.row(d), &base.input, ids, i, params.window);
                draw_negatives(&base.sampler, params.negatives, &mut rng, &mut negs);
                let (loss, grad) = sgns_step(&h, center, &negs, &mut base.output, lr, true);
                let step = -lr / (ctx.len() + 1) as f64;
                axpy(step, &grad, doc_vectors.row_mut(d));
                for &c in &ctx {
                    axpy(step, &grad, base.input.row_mut(c));
                }
                epoch_loss += loss;
                steps += 1;
                done += 1;
            }
        }
        let mean = if steps == 0 { 0.0 } else { epoch_loss / steps as f64 };
        log::debug!("pvdm epoch {} mean loss {mean:.6}", epoch + 1);
        base.epoch_losses.push(mean);
        base.check_finite()?;
        if !doc_vectors.is_finite() {
            return Err(EmbeddingError::NonFinite("document vectors"));
        }
    }
    Ok(DocEmbeddingModel::from_parts(base, doc_ids, doc_vectors))
}

/// Fits a fresh document vector for `tokens` with word and output vectors frozen.
///
/// The vector starts from a draw seeded by `seed` and runs `steps` passes over
/// the tokens; out-of-vocabulary tokens are ignored.
pub fn infer_doc_vector<S: AsRef<str>>(
    model: &DocEmbeddingModel,
    tokens: &[S],
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>, EmbeddingError> {
    if tokens.is_empty() {
        return Err(EmbeddingError::EmptyTokens);
    }
    let params = &model.base.params;
    let mut rng = rng::seeded(seed, streams::INFER);
    let mut doc = uniform_init(1, params.dim, &mut rng).row(0).to_vec();
    let ids: Vec<usize> = model.base.vocab.ids(tokens).collect();
    let total = (ids.len() * steps).max(1);
    let mut output = model.base.output.clone();
    let mut negs = Vec::with_capacity(params.negatives);
    let mut done = 0usize;
    for _ in 0..steps {
        for (i, &center) in ids.iter().enumerate() {
            let lr = params.lr_at(done as f64 / total as f64);
            let (h, ctx) = hidden(&doc, &model.base.input, &ids, i, params.window);
            draw_negatives(&model.base.sampler, params.negatives, &mut rng, &mut negs);
            let (_, grad) = sgns_step(&h, center, &negs, &mut output, lr, false);
            axpy(-lr / (ctx.len() + 1) as f64, &grad, &mut doc);
            done += 1;
        }
    }
    if doc.iter().any(|v| !v.is_finite()) {
        return Err(EmbeddingError::NonFinite("inferred document vector"));
    }
    Ok(doc)
}
