//! Vocabularies and sparse document vectors.
//!
//! TF-IDF follows the plain textbook form: for a term `w` in document `d`,
//!
//! ```text
//! tf(w, d)  = count(w, d) / len(d)
//! idf(w)    = ln(num_docs / doc_freq(w))
//! tfidf     = tf * idf
//! ```
//!
//! with the natural logarithm and no smoothing, so a term present in every
//! document gets weight zero and drops out of the sparse output.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::preprocess::ProcessedDoc;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot build a vocabulary from zero documents")]
    NoDocuments,
    #[error("every term was filtered out (min_df = {min_df})")]
    EmptyVocabulary { min_df: usize },
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("document {0:?} has no tokens")]
    EmptyDocument(String),
    #[error("malformed vocabulary line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Term-id mapping with document and corpus frequencies.
///
/// Ids are dense and assigned in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    term_to_id: HashMap<String, usize>,
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    total_freq: Vec<u64>,
    num_docs: u64,
    max_features: Option<usize>,
}

impl Vocabulary {
    /// Retains terms with `doc_freq >= min_df`; with a cap, keeps the
    /// `max_features` most frequent terms (corpus-wide counts, ties by term).
    pub fn build(docs: &[ProcessedDoc], max_features: Option<usize>, min_df: usize) -> Result<Self, FeatureError> {
        let token_lists: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
        Self::build_from_tokens(&token_lists, max_features, min_df)
    }

    pub fn build_from_tokens<S: AsRef<str>>(
        docs: &[&[S]],
        max_features: Option<usize>,
        min_df: usize,
    ) -> Result<Self, FeatureError> {
        if docs.is_empty() {
            return Err(FeatureError::NoDocuments);
        }
        if min_df == 0 {
            return Err(FeatureError::InvalidMinDf);
        }
        // term -> (doc_freq, total_freq, last doc seen)
        let mut stats: HashMap<&str, (u64, u64, usize)> = HashMap::new();
        for (d, tokens) in docs.iter().enumerate() {
            for t in tokens.iter() {
                let e = stats.entry(t.as_ref()).or_insert((0, 0, usize::MAX));
                e.1 += 1;
                if e.2 != d {
                    e.0 += 1;
                    e.2 = d;
                }
            }
        }
        let mut kept: Vec<(&str, u64, u64)> = stats
            .into_iter()
            .filter(|(_, (df, _, _))| *df >= min_df as u64)
            .map(|(t, (df, tf, _))| (t, df, tf))
            .collect();
        if let Some(cap) = max_features {
            kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(b.0)));
            kept.truncate(cap);
        }
        if kept.is_empty() {
            return Err(FeatureError::EmptyVocabulary { min_df });
        }
        kept.sort_by(|a, b| a.0.cmp(b.0));

        let mut vocab = Vocabulary {
            term_to_id: HashMap::with_capacity(kept.len()),
            terms: Vec::with_capacity(kept.len()),
            doc_freq: Vec::with_capacity(kept.len()),
            total_freq: Vec::with_capacity(kept.len()),
            num_docs: docs.len() as u64,
            max_features,
        };
        for (id, (t, df, tf)) in kept.into_iter().enumerate() {
            vocab.term_to_id.insert(t.to_string(), id);
            vocab.terms.push(t.to_string());
            vocab.doc_freq.push(df);
            vocab.total_freq.push(tf);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, id: usize) -> u64 {
        self.doc_freq[id]
    }

    pub fn total_freq(&self, id: usize) -> u64 {
        self.total_freq[id]
    }

    pub fn total_freqs(&self) -> &[u64] {
        &self.total_freq
    }

    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn max_features(&self) -> Option<usize> {
        self.max_features
    }

    /// Inverse document frequency `ln(num_docs / doc_freq)`.
    pub fn idf(&self, id: usize) -> f64 {
        (self.num_docs as f64 / self.doc_freq[id] as f64).ln()
    }

    /// In-vocabulary ids of `tokens`, in order.
    pub fn ids<'a, S: AsRef<str>>(&'a self, tokens: &'a [S]) -> impl Iterator<Item = usize> + 'a {
        tokens.iter().filter_map(|t| self.id(t.as_ref()))
    }

    /// Text form: `V num_docs`, then `term id doc_freq total_freq` per line.
    pub fn write_text<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.num_docs)?;
        for (id, t) in self.terms.iter().enumerate() {
            writeln!(out, "{} {} {} {}", t, id, self.doc_freq[id], self.total_freq[id])?;
        }
        Ok(())
    }

    /// Reads the [`write_text`](Self::write_text) form from a line iterator.
    pub fn read_text<I>(lines: &mut I, max_features: Option<usize>) -> Result<Self, FeatureError>
    where
        I: Iterator<Item = (usize, String)>,
    {
        let (line_no, header) = lines.next().ok_or(FeatureError::Parse { line: 0, reason: "missing header".into() })?;
        let mut parts = header.split_whitespace();
        let parse_u64 = |s: Option<&str>, line: usize, what: &str| -> Result<u64, FeatureError> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| FeatureError::Parse { line, reason: format!("bad {what}") })
        };
        let v = parse_u64(parts.next(), line_no, "vocabulary size")? as usize;
        let num_docs = parse_u64(parts.next(), line_no, "document count")?;
        let mut vocab = Vocabulary {
            term_to_id: HashMap::with_capacity(v),
            terms: Vec::with_capacity(v),
            doc_freq: Vec::with_capacity(v),
            total_freq: Vec::with_capacity(v),
            num_docs,
            max_features,
        };
        for expected_id in 0..v {
            let (line_no, line) = lines
                .next()
                .ok_or(FeatureError::Parse { line: 0, reason: format!("expected {v} terms, found {expected_id}") })?;
            let mut parts = line.split_whitespace();
            let term = parts.next().ok_or(FeatureError::Parse { line: line_no, reason: "missing term".into() })?;
            let id = parse_u64(parts.next(), line_no, "id")? as usize;
            if id != expected_id {
                return Err(FeatureError::Parse { line: line_no, reason: format!("id {id} out of order") });
            }
            vocab.doc_freq.push(parse_u64(parts.next(), line_no, "doc_freq")?);
            vocab.total_freq.push(parse_u64(parts.next(), line_no, "total_freq")?);
            vocab.term_to_id.insert(term.to_string(), id);
            vocab.terms.push(term.to_string());
        }
        Ok(vocab)
    }
}

/// Reads numbered lines for [`Vocabulary::read_text`].
pub fn numbered_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, String)> {
    reader.lines().map_while(Result::ok).enumerate().map(|(i, l)| (i + 1, l))
}

/// Sparse real vector with strictly increasing indices and non-zero values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales to unit L2 norm; the empty vector is left as is.
    pub fn l2_normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
        self
    }

    /// Keeps the non-zero entries of a dense vector.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip();
        SparseVector { indices, values }
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, v)| v * dense[i]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    /// `dense += alpha * self`.
    pub fn axpy_into(&self, alpha: f64, dense: &mut [f64]) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            dense[i] += alpha * v;
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

/// Sparse integer term counts (`doc2bow` output).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountVector {
    pub indices: Vec<usize>,
    pub counts: Vec<u32>,
}

impl CountVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn to_sparse(&self) -> SparseVector {
        SparseVector { indices: self.indices.clone(), values: self.counts.iter().map(|&c| c as f64).collect() }
    }
}

/// Integer counts of in-vocabulary tokens; out-of-vocabulary tokens are ignored.
pub fn doc2bow<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> CountVector {
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for id in vocab.ids(tokens) {
        *counts.entry(id).or_insert(0) += 1;
    }
    let mut pairs: Vec<(usize, u32)> = counts.into_iter().collect();
    pairs.sort_unstable();
    let (indices, counts) = pairs.into_iter().unzip();
    CountVector { indices, counts }
}

/// Raw term counts as reals.
pub fn bow_vector(doc: &ProcessedDoc, vocab: &Vocabulary) -> SparseVector {
    doc2bow(&doc.tokens, vocab).to_sparse()
}

/// TF-IDF weights; the length divisor counts every token of the document,
/// in-vocabulary or not. Zero-weight terms are omitted.
pub fn tfidf_vector(doc: &ProcessedDoc, vocab: &Vocabulary) -> Result<SparseVector, FeatureError> {
    tfidf_from_tokens(&doc.tokens, vocab).ok_or_else(|| FeatureError::EmptyDocument(doc.id.clone()))
}

pub fn tfidf_from_tokens<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Option<SparseVector> {
    if tokens.is_empty() {
        return None;
    }
    let doc_len = tokens.len() as f64;
    let counts = doc2bow(tokens, vocab);
    let mut out = SparseVector::default();
    for (&id, &count) in counts.indices.iter().zip(&counts.counts) {
        let value = (count as f64 / doc_len) * vocab.idf(id);
        if value > 0.0 {
            out.indices.push(id);
            out.values.push(value);
        }
    }
    Some(out)
}
