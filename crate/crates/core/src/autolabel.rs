//! Automatic labelling from LDA topic mixtures: topic naming, per-class
//! probability records, threshold-based train/test splits and multi-label
//! binarization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::doc2bow;
use crate::lda::{LdaError, LdaModel};
use crate::linalg::argmax;
use crate::preprocess::ProcessedDoc;
use crate::store::{Artifact, ArtifactHeader, ArtifactKind, BodyLines, StoreError};

#[derive(Debug, Error)]
pub enum AutolabelError {
    #[error("{topics} topics cannot be matched one-to-one with {classes} classes")]
    SizeMismatch { topics: usize, classes: usize },
    #[error("topic map is not a bijection: {0}")]
    NotBijective(String),
    #[error("topic {0} is dominant for no labelled document")]
    DegenerateContingency(usize),
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("{topics} dominant topics but {labels} labels")]
    LengthMismatch { topics: usize, labels: usize },
    #[error("threshold {0} outside its valid range")]
    InvalidThreshold(f64),
    #[error("no record reaches threshold {0}; training side would be empty")]
    EmptyTrainSide(f64),
    #[error("no records")]
    NoRecords,
    #[error(transparent)]
    Lda(#[from] LdaError),
}

/// A probability threshold in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(th: f64) -> Result<Self, AutolabelError> {
        if th > 0.0 && th <= 1.0 {
            Ok(Threshold(th))
        } else {
            Err(AutolabelError::InvalidThreshold(th))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Minimum-cost perfect matching on a square matrix; `result[row] = col`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // 1-based potentials formulation; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Bijection from topic ids to class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicClassMap {
    class_names: Vec<String>,
    topic_to_class: Vec<usize>,
}

/// How topics get their class names.
#[derive(Debug, Clone, Copy)]
pub enum TopicNaming<'a> {
    /// Manual mapping, checked for bijectivity.
    Explicit(&'a BTreeMap<usize, String>),
    /// Maximum-agreement matching of each labelled document's dominant topic
    /// against its original label.
    Labeled { dominant_topics: &'a [usize], labels: &'a [String] },
}

impl TopicClassMap {
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_index(&self, topic: usize) -> usize {
        self.topic_to_class[topic]
    }

    pub fn class_of(&self, topic: usize) -> &str {
        &self.class_names[self.topic_to_class[topic]]
    }

    pub fn num_topics(&self) -> usize {
        self.topic_to_class.len()
    }

    /// Mapping as `topic → class name`.
    pub fn to_map(&self) -> BTreeMap<usize, String> {
        (0..self.num_topics()).map(|t| (t, self.class_of(t).to_string())).collect()
    }
}

/// K×L counts of (dominant topic, original label).
pub fn contingency(
    k: usize,
    class_names: &[String],
    dominant_topics: &[usize],
    labels: &[String],
) -> Result<Vec<Vec<u64>>, AutolabelError> {
    if dominant_topics.len() != labels.len() {
        return Err(AutolabelError::LengthMismatch { topics: dominant_topics.len(), labels: labels.len() });
    }
    let mut table = vec![vec![0u64; class_names.len()]; k];
    for (&t, label) in dominant_topics.iter().zip(labels) {
        let c = class_names.iter().position(|n| n == label).ok_or_else(|| AutolabelError::UnknownLabel(label.clone()))?;
        if t >= k {
            return Err(AutolabelError::Lda(LdaError::TopicOutOfRange { topic: t, k }));
        }
        table[t][c] += 1;
    }
    Ok(table)
}

pub fn assign_topic_names(
    model: &LdaModel,
    class_names: &[String],
    naming: TopicNaming<'_>,
) -> Result<TopicClassMap, AutolabelError> {
    let k = model.num_topics();
    if k != class_names.len() {
        return Err(AutolabelError::SizeMismatch { topics: k, classes: class_names.len() });
    }
    let topic_to_class = match naming {
        TopicNaming::Explicit(map) => {
            let mut used = HashSet::new();
            let mut out = Vec::with_capacity(k);
            for t in 0..k {
                let name = map.get(&t).ok_or_else(|| AutolabelError::NotBijective(format!("topic {t} unmapped")))?;
                let c = class_names.iter().position(|n| n == name).ok_or_else(|| AutolabelError::UnknownLabel(name.clone()))?;
                if !used.insert(c) {
                    return Err(AutolabelError::NotBijective(format!("class {name:?} used twice")));
                }
                out.push(c);
            }
            if let Some(extra) = map.keys().find(|&&t| t >= k) {
                return Err(AutolabelError::NotBijective(format!("topic {extra} does not exist")));
            }
            out
        }
        TopicNaming::Labeled { dominant_topics, labels } => {
            let table = contingency(k, class_names, dominant_topics, labels)?;
            if let Some(t) = table.iter().position(|row| row.iter().all(|&c| c == 0)) {
                return Err(AutolabelError::DegenerateContingency(t));
            }
            let cost: Vec<Vec<f64>> = table.iter().map(|row| row.iter().map(|&c| -(c as f64)).collect()).collect();
            hungarian(&cost)
        }
    };
    Ok(TopicClassMap { class_names: class_names.to_vec(), topic_to_class })
}

/// One document's class mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoLabeledRecord {
    pub id: String,
    /// Indexed like the dataset's class names.
    pub class_probs: Vec<f64>,
    pub dominant: usize,
    pub original: Option<String>,
    pub tokens: Vec<String>,
}

impl AutoLabeledRecord {
    pub fn max_prob(&self) -> f64 {
        self.class_probs[self.dominant]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoLabeledDataset {
    pub class_names: Vec<String>,
    pub records: Vec<AutoLabeledRecord>,
}

impl AutoLabeledDataset {
    pub fn dominant_class(&self, record: &AutoLabeledRecord) -> &str {
        &self.class_names[record.dominant]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Builds a record from topic probabilities re-indexed through `map`.
pub fn record_from_topics(map: &TopicClassMap, doc: &ProcessedDoc, topic_probs: &[f64]) -> AutoLabeledRecord {
    let mut class_probs = vec![0.0; map.class_names.len()];
    for (t, p) in topic_probs.iter().enumerate() {
        class_probs[map.class_index(t)] = *p;
    }
    AutoLabeledRecord {
        id: doc.id.clone(),
        dominant: argmax(&class_probs),
        class_probs,
        original: doc.label.clone(),
        tokens: doc.tokens.clone(),
    }
}

/// One record per document with in-vocabulary tokens. When `trained_on_docs`
/// is set, `docs` must be the LDA training corpus in order and θ comes from
/// the stored counts; otherwise each document is folded in.
pub fn build_auto_dataset(
    model: &LdaModel,
    map: &TopicClassMap,
    docs: &[ProcessedDoc],
    trained_on_docs: bool,
) -> Result<AutoLabeledDataset, AutolabelError> {
    if map.num_topics() != model.num_topics() {
        return Err(AutolabelError::SizeMismatch { topics: model.num_topics(), classes: map.num_topics() });
    }
    if trained_on_docs && docs.len() != model.num_docs() {
        return Err(AutolabelError::LengthMismatch { topics: model.num_docs(), labels: docs.len() });
    }
    let records: Vec<Option<AutoLabeledRecord>> = docs
        .par_iter()
        .enumerate()
        .map(|(d, doc)| {
            let theta = if trained_on_docs {
                model.training_distribution(d)
            } else {
                model.doc_topic_distribution(&doc2bow(&doc.tokens, model.vocab()))
            };
            match theta {
                Ok(t) => Ok(Some(record_from_topics(map, doc, t.probs()))),
                Err(LdaError::EmptyDocument) => {
                    log::warn!("autolabel: document {} has no in-vocabulary tokens, skipped", doc.id);
                    Ok(None)
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_, AutolabelError>>()?;
    Ok(AutoLabeledDataset { class_names: map.class_names.clone(), records: records.into_iter().flatten().collect() })
}

/// Records whose top probability reaches `th` become training documents
/// labelled with their dominant class; the rest become test documents that
/// keep their original label.
pub fn threshold_split(
    dataset: &AutoLabeledDataset,
    th: Threshold,
) -> Result<(Vec<ProcessedDoc>, Vec<ProcessedDoc>), AutolabelError> {
    if dataset.is_empty() {
        return Err(AutolabelError::NoRecords);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in &dataset.records {
        if r.max_prob() >= th.value() {
            train.push(ProcessedDoc { id: r.id.clone(), tokens: r.tokens.clone(), label: Some(dataset.dominant_class(r).to_string()) });
        } else {
            test.push(ProcessedDoc { id: r.id.clone(), tokens: r.tokens.clone(), label: r.original.clone() });
        }
    }
    if train.is_empty() {
        return Err(AutolabelError::EmptyTrainSide(th.value()));
    }
    Ok((train, test))
}

/// 0/1 membership over the class list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiLabelSet {
    bits: Vec<u8>,
}

impl MultiLabelSet {
    pub fn empty(len: usize) -> Self {
        MultiLabelSet { bits: vec![0; len] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        MultiLabelSet { bits: bits.iter().map(|&b| u8::from(b)).collect() }
    }

    pub fn from_indices(len: usize, set: &[usize]) -> Self {
        let mut s = Self::empty(len);
        for &i in set {
            s.bits[i] = 1;
        }
        s
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, class: usize) -> bool {
        self.bits[class] == 1
    }

    pub fn set(&mut self, class: usize, on: bool) {
        self.bits[class] = u8::from(on);
    }

    pub fn cardinality(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.contains(i)).collect()
    }
}

/// `bit_c = 1` exactly when `class_probs[c] >= th`.
pub fn multilabel_binarize(records: &[AutoLabeledRecord], th: f64) -> Result<Vec<MultiLabelSet>, AutolabelError> {
    if !(th > 0.0 && th < 1.0) {
        return Err(AutolabelError::InvalidThreshold(th));
    }
    Ok(records
        .par_iter()
        .map(|r| MultiLabelSet { bits: r.class_probs.iter().map(|&p| u8::from(p >= th)).collect() })
        .collect())
}

/// Number of sets per observed cardinality.
pub fn label_cardinality_histogram(sets: &[MultiLabelSet]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for s in sets {
        *h.entry(s.cardinality()).or_insert(0) += 1;
    }
    h
}

pub fn onehot_from_single(label: &str, class_names: &[String]) -> Result<MultiLabelSet, AutolabelError> {
    let c = class_names.iter().position(|n| n == label).ok_or_else(|| AutolabelError::UnknownLabel(label.to_string()))?;
    Ok(MultiLabelSet::from_indices(class_names.len(), &[c]))
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    id: String,
    probs: BTreeMap<String, f64>,
    dominant: String,
    #[serde(default)]
    original: Option<String>,
    tokens: Vec<String>,
}

impl AutoLabeledDataset {
    /// One JSON object per line: `id`, `probs`, `dominant`, `original`, `tokens`.
    pub fn write_jsonl(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for r in &self.records {
            let line = RecordLine {
                id: r.id.clone(),
                probs: self.class_names.iter().cloned().zip(r.class_probs.iter().copied()).collect(),
                dominant: self.dominant_class(r).to_string(),
                original: r.original.clone(),
                tokens: r.tokens.clone(),
            };
            serde_json::to_writer(&mut *out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn parse_line(&self, text: &str) -> Result<AutoLabeledRecord, String> {
        let line: RecordLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if line.probs.len() != self.class_names.len() {
            return Err(format!("expected {} class probabilities", self.class_names.len()));
        }
        let class_probs = self
            .class_names
            .iter()
            .map(|c| line.probs.get(c).copied().ok_or_else(|| format!("missing probability for {c:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        let dominant = argmax(&class_probs);
        if self.class_names[dominant] != line.dominant {
            return Err(format!("dominant {:?} is not the argmax class", line.dominant));
        }
        Ok(AutoLabeledRecord { id: line.id, class_probs, dominant, original: line.original, tokens: line.tokens })
    }
}

impl Artifact for AutoLabeledDataset {
    const KIND: ArtifactKind = ArtifactKind::Autodata;

    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("classes".into(), serde_json::to_string(&self.class_names).expect("strings serialize")),
            ("records".into(), self.records.len().to_string()),
        ])
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        self.write_jsonl(out)
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        let class_names: Vec<String> =
            serde_json::from_str(header.param("classes")?).map_err(|e| StoreError::BadHeader(format!("classes: {e}")))?;
        let n: usize = header.param_as("records")?;
        let mut ds = AutoLabeledDataset { class_names, records: Vec::with_capacity(n) };
        for _ in 0..n {
            let text = body.next_line()?;
            let record = ds.parse_line(text).map_err(|reason| StoreError::parse(body.line_no(), reason))?;
            ds.records.push(record);
        }
        Ok(ds)
    }
}
