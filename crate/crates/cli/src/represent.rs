//! Turning processed documents into feature rows.

use std::collections::HashMap;
use std::sync::Mutex;

use newsclass::classifiers::FeatureMatrix;
use newsclass::embeddings::{average_embedding, infer_doc_vector, DocEmbeddingModel, EmbeddingModel, SubwordEmbeddingModel, WordVectors};
use newsclass::features::{bow_vector, tfidf_from_tokens, Vocabulary};
use newsclass::{store, ProcessedDoc, SparseVector};
use rayon::prelude::*;

use crate::config::{EmbeddingKind, PipelineConfig, Representation};
use crate::error::{CliError, CliResult};
use crate::util::require;

pub enum Featurizer {
    Bow(Vocabulary),
    Tfidf(Vocabulary),
    DocVec {
        model: DocEmbeddingModel,
        steps: usize,
        seed: u64,
        reinfer: bool,
        /// Inferred vectors by document id.
        cache: Mutex<HashMap<String, SparseVector>>,
    },
    Average(Box<dyn WordVectors + Send + Sync>),
}

impl Featurizer {
    /// Sparse representations fit their vocabulary on `train`; dense ones load
    /// the embedding artifacts written by `train-embeddings`.
    pub fn fit(repr: Representation, train: &[ProcessedDoc], cfg: &PipelineConfig) -> CliResult<Self> {
        Ok(match repr {
            Representation::Bow => Featurizer::Bow(Vocabulary::build(train, cfg.features.max_features, cfg.features.min_df)?),
            Representation::Tfidf => Featurizer::Tfidf(Vocabulary::build(train, cfg.features.max_features, cfg.features.min_df)?),
            Representation::Docvec => {
                let path = cfg.out(EmbeddingKind::Pvdm.file_name());
                require(&path, "train-embeddings with models including \"pvdm\"")?;
                Featurizer::DocVec {
                    model: store::load(&path)?,
                    steps: cfg.embeddings.infer_steps,
                    seed: cfg.seed,
                    reinfer: cfg.embeddings.reinfer_train,
                    cache: Mutex::default(),
                }
            }
            Representation::AvgEmbedding => {
                let kind = cfg.embeddings.average_with;
                let path = cfg.out(kind.file_name());
                require(&path, &format!("train-embeddings with models including \"{kind:?}\"").to_lowercase())?;
                Featurizer::Average(match kind {
                    EmbeddingKind::Sgns => Box::new(store::load::<EmbeddingModel>(&path)?),
                    EmbeddingKind::Subword => Box::new(store::load::<SubwordEmbeddingModel>(&path)?),
                    EmbeddingKind::Pvdm => Box::new(store::load::<DocEmbeddingModel>(&path)?),
                })
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Featurizer::Bow(v) | Featurizer::Tfidf(v) => v.len(),
            Featurizer::DocVec { model, .. } => model.dim(),
            Featurizer::Average(m) => m.dim(),
        }
    }

    fn row(&self, doc: &ProcessedDoc) -> CliResult<SparseVector> {
        Ok(match self {
            Featurizer::Bow(v) => bow_vector(doc, v),
            Featurizer::Tfidf(v) => tfidf_from_tokens(&doc.tokens, v).unwrap_or_default(),
            Featurizer::DocVec { model, steps, seed, reinfer, cache } => match model.doc_vector(&doc.id) {
                Some(v) if !reinfer => SparseVector::from_dense(v),
                _ if doc.tokens.is_empty() => SparseVector::default(),
                _ => {
                    if let Some(v) = cache.lock().expect("cache lock").get(&doc.id) {
                        return Ok(v.clone());
                    }
                    let v = SparseVector::from_dense(&infer_doc_vector(model, &doc.tokens, *steps, *seed)?);
                    cache.lock().expect("cache lock").insert(doc.id.clone(), v.clone());
                    v
                }
            },
            Featurizer::Average(m) => SparseVector::from_dense(&average_embedding(m.as_ref(), &doc.tokens)),
        })
    }

    pub fn transform(&self, docs: &[ProcessedDoc]) -> CliResult<FeatureMatrix> {
        let rows = docs.par_iter().map(|d| self.row(d)).collect::<CliResult<Vec<_>>>()?;
        if let Some(bad) = rows.iter().find(|r| r.values.iter().any(|v| !v.is_finite())) {
            return Err(CliError::numeric(format!("non-finite feature value in a row with {} entries", bad.len())));
        }
        Ok(FeatureMatrix::new(self.dim(), rows)?)
    }
}
