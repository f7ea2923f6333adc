//! News-article classification toolkit.
//!
//! The crate covers the whole pipeline from raw articles to evaluation:
//!
//! - [`corpus`]: loading, validating and splitting labelled article collections
//! - [`preprocess`]: Unicode-aware cleaning, tokenization, suffix stemming,
//!   stopword removal and word n-grams
//! - [`features`]: vocabularies, bag-of-words, TF-IDF and `doc2bow` vectors
//! - [`embeddings`]: skip-gram, subword and paragraph-vector (PV-DM) training
//! - [`lda`]: latent Dirichlet allocation by collapsed Gibbs sampling
//! - [`autolabel`]: turning topic distributions into single- and multi-label datasets
//! - [`classifiers`]: SGD linear models, k-nearest neighbours, binary relevance
//! - [`eval`]: single-label reports and example-based multi-label metrics
//! - [`store`]: versioned text persistence for every trained artifact
//!
//! All randomness is driven by explicit `u64` seeds; single-threaded training
//! is bit-for-bit reproducible.

pub mod autolabel;
pub mod classifiers;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod features;
pub mod lda;
pub mod linalg;
pub mod preprocess;
pub mod store;
pub mod synthetic;

pub(crate) mod rng;

pub use autolabel::{AutoLabeledDataset, AutoLabeledRecord, MultiLabelSet, Threshold, TopicClassMap};
pub use corpus::{Corpus, Document};
pub use features::{CountVector, SparseVector, Vocabulary};
pub use lda::{LdaModel, TopicDistribution};
pub use preprocess::{PreprocessConfig, ProcessedDoc};
