//! Artifact bodies. Each vector block is `rows dim` followed by `key v1 .. v_dim`
//! lines, so the input block alone is a word2vec text file.

use std::collections::BTreeMap;
use std::io::Write;

use crate::linalg::Matrix;
use crate::store::{
    escape, read_vocab_block, unescape, write_keyed_reals, Artifact, ArtifactHeader, ArtifactKind, BodyLines, StoreError,
};

use super::{DocEmbeddingModel, EmbeddingModel, SgnsParams, SubwordEmbeddingModel};

fn sgns_params(p: &SgnsParams) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dim".into(), p.dim.to_string()),
        ("window".into(), p.window.to_string()),
        ("negatives".into(), p.negatives.to_string()),
        ("epochs".into(), p.epochs.to_string()),
        ("initial_lr".into(), p.initial_lr.to_string()),
        ("seed".into(), p.seed.to_string()),
        ("min_count".into(), p.min_count.to_string()),
    ])
}

fn read_sgns_params(h: &ArtifactHeader) -> Result<SgnsParams, StoreError> {
    Ok(SgnsParams {
        dim: h.param_as("dim")?,
        window: h.param_as("window")?,
        negatives: h.param_as("negatives")?,
        epochs: h.param_as("epochs")?,
        initial_lr: h.param_as("initial_lr")?,
        seed: h.param_as("seed")?,
        min_count: h.param_as("min_count")?,
    })
}

fn write_block<'k>(out: &mut dyn Write, keys: impl Iterator<Item = &'k str>, m: &Matrix) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.rows(), m.cols())?;
    for (r, key) in keys.enumerate() {
        write_keyed_reals(out, &escape(key), m.row(r))?;
    }
    Ok(())
}

/// Reads a vector block; `expected_keys` pins the row keys when known.
fn read_block(body: &mut BodyLines<'_>, dim: usize, expected_keys: Option<&[String]>) -> Result<(Vec<String>, Matrix), StoreError> {
    let head = body.values::<usize>(2, "block size")?;
    if head[1] != dim {
        return Err(StoreError::parse(body.line_no(), format!("block dim {} differs from header dim {dim}", head[1])));
    }
    if let Some(keys) = expected_keys {
        if keys.len() != head[0] {
            return Err(StoreError::parse(body.line_no(), format!("block has {} rows, expected {}", head[0], keys.len())));
        }
    }
    let mut keys = Vec::with_capacity(head[0]);
    let mut data = Vec::with_capacity(head[0] * dim);
    for r in 0..head[0] {
        let (key, values) = body.keyed_reals(dim)?;
        let key = unescape(key);
        if let Some(expected) = expected_keys {
            if expected[r] != key {
                return Err(StoreError::parse(body.line_no(), format!("row key {key:?}, expected {:?}", expected[r])));
            }
        }
        keys.push(key);
        data.extend(values);
    }
    Ok((keys, Matrix::from_vec(head[0], dim, data)))
}

fn write_base(m: &EmbeddingModel, out: &mut dyn Write) -> std::io::Result<()> {
    m.vocab.write_text(out)?;
    let terms = || m.vocab.terms().iter().map(String::as_str);
    write_block(out, terms(), &m.input)?;
    write_block(out, terms(), &m.output)
}

fn read_base(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<EmbeddingModel, StoreError> {
    let params = read_sgns_params(header)?;
    let vocab = read_vocab_block(body, None)?;
    let (_, input) = read_block(body, params.dim, Some(vocab.terms()))?;
    let (_, output) = read_block(body, params.dim, Some(vocab.terms()))?;
    Ok(EmbeddingModel::from_parts(vocab, params, input, output))
}

impl Artifact for EmbeddingModel {
    const KIND: ArtifactKind = ArtifactKind::Embedding;

    fn params(&self) -> BTreeMap<String, String> {
        sgns_params(&self.params)
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        write_base(self, out)
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        read_base(header, body)
    }
}

impl Artifact for SubwordEmbeddingModel {
    const KIND: ArtifactKind = ArtifactKind::Subword;

    fn params(&self) -> BTreeMap<String, String> {
        let mut p = sgns_params(&self.base.params);
        p.insert("minn".into(), self.minn.to_string());
        p.insert("maxn".into(), self.maxn.to_string());
        p.insert("buckets".into(), self.buckets.to_string());
        p
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        write_base(&self.base, out)?;
        let keys: Vec<String> = (0..self.buckets).map(|b| format!("__bucket__{b}")).collect();
        write_block(out, keys.iter().map(String::as_str), &self.ngram_vectors)
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        let base = read_base(header, body)?;
        let buckets: usize = header.param_as("buckets")?;
        let keys: Vec<String> = (0..buckets).map(|b| format!("__bucket__{b}")).collect();
        let (_, grams) = read_block(body, base.params.dim, Some(&keys))?;
        Ok(SubwordEmbeddingModel::from_parts(base, header.param_as("minn")?, header.param_as("maxn")?, grams))
    }
}

const DOC_PREFIX: &str = "__doc__";

impl Artifact for DocEmbeddingModel {
    const KIND: ArtifactKind = ArtifactKind::Docvec;

    fn params(&self) -> BTreeMap<String, String> {
        let mut p = sgns_params(&self.base.params);
        p.insert("docs".into(), self.doc_ids.len().to_string());
        p
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        write_base(&self.base, out)?;
        let keys: Vec<String> = self.doc_ids.iter().map(|d| format!("{DOC_PREFIX}{d}")).collect();
        write_block(out, keys.iter().map(String::as_str), &self.doc_vectors)
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        let base = read_base(header, body)?;
        let (keys, docs) = read_block(body, base.params.dim, None)?;
        let ids = keys
            .into_iter()
            .map(|k| {
                k.strip_prefix(DOC_PREFIX)
                    .map(str::to_string)
                    .ok_or_else(|| StoreError::parse(body.line_no(), format!("document key {k:?} lacks prefix")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DocEmbeddingModel::from_parts(base, ids, docs))
    }
}
