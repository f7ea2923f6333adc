//! Latent Dirichlet Allocation by collapsed Gibbs sampling.
//!
//! Each token's topic is resampled from
//! `p(z = k) ∝ (n_dk + α)(n_kw + β) / (n_k + Vβ)` with the token itself
//! removed from the counts. Estimates are read from the final state:
//! `θ_dk = (n_dk + α)/(n_d + Kα)`, `φ_kv = (n_kv + β)/(n_k + Vβ)`.
//! Unseen documents get 20 sweeps against a frozen φ.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::{CountVector, Vocabulary};
use crate::linalg::argmax;
use crate::rng::{self, streams};
use crate::store::{read_vocab_block, Artifact, ArtifactHeader, ArtifactKind, BodyLines, StoreError};

pub const HELD_OUT_SWEEPS: usize = 20;

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("need at least 2 topics, got {0}")]
    TooFewTopics(usize),
    #[error("alpha and beta must be positive and finite")]
    InvalidPrior,
    #[error("no documents with in-vocabulary tokens")]
    EmptyCorpus,
    #[error("document has no in-vocabulary tokens")]
    EmptyDocument,
    #[error("topic {topic} out of range for {k} topics")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("asked for {k} keywords from a vocabulary of {v}")]
    TooManyKeywords { k: usize, v: usize },
    #[error("term id {0} outside the model vocabulary")]
    UnknownTerm(usize),
    #[error("probabilities must be non-negative and sum to 1 (sum {0})")]
    InvalidDistribution(f64),
    #[error("empty parameter grid")]
    EmptyGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    pub k: usize,
    /// Symmetric doc-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub passes: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams { k: 8, alpha: None, beta: 0.01, passes: 10, iterations: 20, seed: 1 }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn sweeps(&self) -> usize {
        self.passes * self.iterations
    }
}

/// Topic probabilities for one document.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct TopicDistribution {
    probs: Vec<f64>,
}

impl TopicDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, LdaError> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
            return Err(LdaError::InvalidDistribution(sum));
        }
        Ok(TopicDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable topic; the lowest index wins ties.
    pub fn dominant_topic(&self) -> usize {
        argmax(&self.probs)
    }
}

pub fn dominant_topic(dist: &TopicDistribution) -> usize {
    dist.dominant_topic()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    sweeps: usize,
    vocab: Vocabulary,
    /// K×V, row-major.
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
    /// D×K, row-major.
    doc_topic: Vec<u32>,
    doc_lens: Vec<u64>,
    /// Token word ids and topic assignments; empty after loading from disk.
    doc_words: Vec<Vec<u32>>,
    assignments: Vec<Vec<u16>>,
}

fn expand(bow: &CountVector, v: usize) -> Vec<u32> {
    let mut words = Vec::with_capacity(bow.total() as usize);
    for (&id, &c) in bow.indices.iter().zip(&bow.counts) {
        if id < v {
            words.extend(std::iter::repeat_n(id as u32, c as usize));
        }
    }
    words
}

fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return k;
        }
    }
    weights.len() - 1
}

impl LdaModel {
    /// A model with given counts and no token state.
    pub fn from_counts(
        vocab: Vocabulary,
        alpha: f64,
        beta: f64,
        topic_word: Vec<Vec<u32>>,
        doc_topic: Vec<Vec<u32>>,
    ) -> Result<Self, LdaError> {
        let k = topic_word.len();
        if k < 2 {
            return Err(LdaError::TooFewTopics(k));
        }
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(LdaError::InvalidPrior);
        }
        let v = vocab.len();
        if topic_word.iter().any(|r| r.len() != v) || doc_topic.iter().any(|r| r.len() != k) {
            return Err(LdaError::UnknownTerm(v));
        }
        let topic_totals = topic_word.iter().map(|r| r.iter().map(|&c| c as u64).sum()).collect();
        let doc_lens = doc_topic.iter().map(|r| r.iter().map(|&c| c as u64).sum()).collect();
        Ok(LdaModel {
            k,
            alpha,
            beta,
            seed: 0,
            sweeps: 0,
            vocab,
            topic_word: topic_word.concat(),
            topic_totals,
            doc_topic: doc_topic.concat(),
            doc_lens,
            doc_words: Vec::new(),
            assignments: Vec::new(),
        })
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_docs(&self) -> usize {
        self.doc_lens.len()
    }

    pub fn topic_word_count(&self, topic: usize, term: usize) -> u32 {
        self.topic_word[topic * self.vocab.len() + term]
    }

    pub fn topic_total(&self, topic: usize) -> u64 {
        self.topic_totals[topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.k + topic]
    }

    pub fn assignments(&self) -> &[Vec<u16>] {
        &self.assignments
    }

    pub fn phi(&self, topic: usize, term: usize) -> f64 {
        let v = self.vocab.len() as f64;
        (self.topic_word_count(topic, term) as f64 + self.beta) / (self.topic_totals[topic] as f64 + v * self.beta)
    }

    pub fn phi_row(&self, topic: usize) -> Vec<f64> {
        (0..self.vocab.len()).map(|w| self.phi(topic, w)).collect()
    }

    fn theta(&self, counts: &[u32], len: u64) -> TopicDistribution {
        let denom = len as f64 + self.k as f64 * self.alpha;
        TopicDistribution { probs: counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect() }
    }

    /// θ of training document `doc` from the stored counts.
    pub fn training_distribution(&self, doc: usize) -> Result<TopicDistribution, LdaError> {
        if self.doc_lens.get(doc).copied().unwrap_or(0) == 0 {
            return Err(LdaError::EmptyDocument);
        }
        Ok(self.theta(&self.doc_topic[doc * self.k..(doc + 1) * self.k], self.doc_lens[doc]))
    }

    /// θ for an unseen document: held-out sweeps with φ frozen, seeded from the
    /// model seed. Out-of-vocabulary ids carry no mass.
    pub fn doc_topic_distribution(&self, bow: &CountVector) -> Result<TopicDistribution, LdaError> {
        let words = expand(bow, self.vocab.len());
        if words.is_empty() {
            return Err(LdaError::EmptyDocument);
        }
        let mut rng = rng::seeded(self.seed, streams::INFER);
        let mut counts = vec![0u32; self.k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.random_range(0..self.k);
                counts[t] += 1;
                t
            })
            .collect();
        let phis: Vec<Vec<f64>> = words.iter().map(|&w| (0..self.k).map(|t| self.phi(t, w as usize)).collect()).collect();
        let mut p = vec![0.0; self.k];
        for _ in 0..HELD_OUT_SWEEPS {
            for (i, phi) in phis.iter().enumerate() {
                counts[z[i]] -= 1;
                for t in 0..self.k {
                    p[t] = (counts[t] as f64 + self.alpha) * phi[t];
                }
                z[i] = draw(&p, &mut rng);
                counts[z[i]] += 1;
            }
        }
        Ok(self.theta(&counts, words.len() as u64))
    }

    /// `k` highest-φ terms of `topic`, descending, ties by term.
    pub fn top_keywords(&self, topic: usize, k: usize) -> Result<Vec<(String, f64)>, LdaError> {
        if topic >= self.k {
            return Err(LdaError::TopicOutOfRange { topic, k: self.k });
        }
        if k > self.vocab.len() {
            return Err(LdaError::TooManyKeywords { k, v: self.vocab.len() });
        }
        let mut scored: Vec<(usize, f64)> = (0..self.vocab.len()).map(|w| (w, self.phi(topic, w))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| self.vocab.term(a.0).cmp(self.vocab.term(b.0))));
        Ok(scored.into_iter().take(k).map(|(w, p)| (self.vocab.term(w).to_string(), p)).collect())
    }

    /// `exp(-Σ log Σ_k θ_dk φ_kw / Σ n_d)` over held-out documents.
    pub fn perplexity(&self, held_out: &[CountVector]) -> Result<f64, LdaError> {
        let mut log_lik = 0.0;
        let mut tokens = 0u64;
        for (d, bow) in held_out.iter().enumerate() {
            let theta = match self.doc_topic_distribution(bow) {
                Ok(t) => t,
                Err(LdaError::EmptyDocument) => {
                    log::warn!("perplexity: held-out document {d} has no in-vocabulary tokens, skipped");
                    continue;
                }
                Err(e) => return Err(e),
            };
            for (&w, &c) in bow.indices.iter().zip(&bow.counts) {
                if w >= self.vocab.len() {
                    continue;
                }
                let p: f64 = (0..self.k).map(|t| theta.probs[t] * self.phi(t, w)).sum();
                log_lik += c as f64 * p.ln();
                tokens += c as u64;
            }
        }
        if tokens == 0 {
            return Err(LdaError::EmptyCorpus);
        }
        Ok((-log_lik / tokens as f64).exp())
    }

    /// Recomputes every count from the token state (when present) and checks
    /// the marginal identities.
    pub fn counts_consistent(&self) -> bool {
        let v = self.vocab.len();
        let rows_ok = (0..self.k)
            .all(|t| self.topic_word[t * v..(t + 1) * v].iter().map(|&c| c as u64).sum::<u64>() == self.topic_totals[t]);
        let docs_ok = (0..self.num_docs())
            .all(|d| self.doc_topic[d * self.k..(d + 1) * self.k].iter().map(|&c| c as u64).sum::<u64>() == self.doc_lens[d]);
        if !(rows_ok && docs_ok) {
            return false;
        }
        if self.assignments.is_empty() {
            return true;
        }
        let mut tw = vec![0u32; self.topic_word.len()];
        let mut dt = vec![0u32; self.doc_topic.len()];
        for (d, (words, z)) in self.doc_words.iter().zip(&self.assignments).enumerate() {
            if words.len() as u64 != self.doc_lens[d] {
                return false;
            }
            for (&w, &t) in words.iter().zip(z) {
                tw[t as usize * v + w as usize] += 1;
                dt[d * self.k + t as usize] += 1;
            }
        }
        tw == self.topic_word && dt == self.doc_topic
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, p: &mut [f64]) {
        let v = self.vocab.len();
        let vb = v as f64 * self.beta;
        for d in 0..self.doc_words.len() {
            for i in 0..self.doc_words[d].len() {
                let w = self.doc_words[d][i] as usize;
                let old = self.assignments[d][i] as usize;
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;
                self.doc_topic[d * self.k + old] -= 1;
                for t in 0..self.k {
                    p[t] = (self.doc_topic[d * self.k + t] as f64 + self.alpha)
                        * (self.topic_word[t * v + w] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + vb);
                }
                let new = draw(p, rng);
                self.assignments[d][i] = new as u16;
                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
                self.doc_topic[d * self.k + new] += 1;
            }
        }
    }
}

/// Trains on bag-of-words documents over `vocab`.
pub fn train_lda(corpus: &[CountVector], vocab: &Vocabulary, params: &LdaParams) -> Result<LdaModel, LdaError> {
    let k = params.k;
    if k < 2 {
        return Err(LdaError::TooFewTopics(k));
    }
    if k > u16::MAX as usize {
        return Err(LdaError::TopicOutOfRange { topic: k, k: u16::MAX as usize });
    }
    let alpha = params.alpha();
    if !(alpha > 0.0 && params.beta > 0.0 && alpha.is_finite() && params.beta.is_finite()) {
        return Err(LdaError::InvalidPrior);
    }
    let v = vocab.len();
    let doc_words: Vec<Vec<u32>> = corpus.iter().map(|b| expand(b, v)).collect();
    for (d, w) in doc_words.iter().enumerate() {
        if w.is_empty() {
            log::warn!("lda: document {d} has no in-vocabulary tokens, skipped");
        }
    }
    if doc_words.iter().all(Vec::is_empty) {
        return Err(LdaError::EmptyCorpus);
    }
    let mut init = rng::seeded(params.seed, streams::INIT);
    let mut model = LdaModel {
        k,
        alpha,
        beta: params.beta,
        seed: params.seed,
        sweeps: params.sweeps(),
        vocab: vocab.clone(),
        topic_word: vec![0; k * v],
        topic_totals: vec![0; k],
        doc_topic: vec![0; corpus.len() * k],
        doc_lens: doc_words.iter().map(|w| w.len() as u64).collect(),
        assignments: Vec::with_capacity(corpus.len()),
        doc_words: Vec::new(),
    };
    for (d, words) in doc_words.iter().enumerate() {
        let z: Vec<u16> = words
            .iter()
            .map(|&w| {
                let t = init.random_range(0..k);
                model.topic_word[t * v + w as usize] += 1;
                model.topic_totals[t] += 1;
                model.doc_topic[d * k + t] += 1;
                t as u16
            })
            .collect();
        model.assignments.push(z);
    }
    model.doc_words = doc_words;
    let mut rng = rng::seeded(params.seed, streams::TRAIN);
    let mut p = vec![0.0; k];
    for pass in 0..params.passes {
        for _ in 0..params.iterations {
            model.sweep(&mut rng, &mut p);
        }
        debug_assert!(model.counts_consistent(), "count invariants broken after pass {pass}");
        log::debug!("lda pass {}/{} done", pass + 1, params.passes);
    }
    Ok(model)
}

/// One grid point and its held-out perplexity.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub params: LdaParams,
    pub perplexity: f64,
}

/// Trains every grid point (concurrently, one chain each) and keeps the model
/// with the lowest held-out perplexity; earlier grid points win ties.
pub fn select_best_model(
    train: &[CountVector],
    held_out: &[CountVector],
    vocab: &Vocabulary,
    grid: &[LdaParams],
) -> Result<(LdaModel, Vec<GridResult>), LdaError> {
    if grid.is_empty() {
        return Err(LdaError::EmptyGrid);
    }
    let fitted: Vec<(LdaModel, f64)> = grid
        .par_iter()
        .map(|p| {
            let m = train_lda(train, vocab, p)?;
            let px = m.perplexity(held_out)?;
            Ok((m, px))
        })
        .collect::<Result<_, LdaError>>()?;
    let results = grid.iter().zip(&fitted).map(|(p, (_, px))| GridResult { params: p.clone(), perplexity: *px }).collect();
    let best = (0..fitted.len()).fold(0, |b, i| if fitted[i].1 < fitted[b].1 { i } else { b });
    let model = fitted.into_iter().nth(best).map(|(m, _)| m).expect("grid is non-empty");
    Ok((model, results))
}

/// Plain-text keyword listing, one block per topic.
pub fn keyword_report(model: &LdaModel, top_k: usize) -> Result<String, LdaError> {
    let mut out = String::new();
    for t in 0..model.num_topics() {
        out.push_str(&format!("topic {t}\n"));
        for (term, p) in model.top_keywords(t, top_k.min(model.vocab.len()))? {
            out.push_str(&format!("  {term}\t{p:.6}\n"));
        }
    }
    Ok(out)
}

impl Artifact for LdaModel {
    const KIND: ArtifactKind = ArtifactKind::Lda;

    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("K".into(), self.k.to_string()),
            ("V".into(), self.vocab.len().to_string()),
            ("alpha".into(), self.alpha.to_string()),
            ("beta".into(), self.beta.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("sweeps".into(), self.sweeps.to_string()),
        ])
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        self.vocab.write_text(out)?;
        let write_rows = |out: &mut dyn Write, data: &[u32], width: usize| -> std::io::Result<()> {
            for row in data.chunks(width.max(1)) {
                let line: Vec<String> = row.iter().map(u32::to_string).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            Ok(())
        };
        write_rows(out, &self.topic_word, self.vocab.len())?;
        writeln!(out, "{}", self.num_docs())?;
        write_rows(out, &self.doc_topic, self.k)
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        let k: usize = header.param_as("K")?;
        let v: usize = header.param_as("V")?;
        let vocab = read_vocab_block(body, None)?;
        if vocab.len() != v {
            return Err(StoreError::parse(body.line_no(), format!("vocabulary has {} terms, header says {v}", vocab.len())));
        }
        let topic_word = (0..k).map(|_| body.values::<u32>(v, "count")).collect::<Result<Vec<_>, _>>()?;
        let d = body.values::<usize>(1, "document count")?[0];
        let doc_topic = (0..d).map(|_| body.values::<u32>(k, "count")).collect::<Result<Vec<_>, _>>()?;
        let mut model = LdaModel::from_counts(vocab, header.param_as("alpha")?, header.param_as("beta")?, topic_word, doc_topic)
            .map_err(|e| StoreError::parse(body.line_no(), e.to_string()))?;
        model.seed = header.param_as("seed")?;
        model.sweeps = header.param_as("sweeps")?;
        Ok(model)
    }
}
