//! Article collections: loading, validation, stratified splitting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("duplicate document id {id:?} on line {line}")]
    DuplicateId { line: u64, id: String },
    #[error("unknown corpus format {0:?} (expected jsonl or csv)")]
    UnknownFormat(String),
    #[error("label {label:?} of document {id:?} is not one of the configured class names")]
    UnknownLabel { id: String, label: String },
    #[error("class {class:?} has {available} documents, {required} required")]
    InsufficientDocuments { class: String, available: usize, required: usize },
    #[error("class names must be distinct, {0:?} repeats")]
    DuplicateClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        ext.parse()
    }
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// One news article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, rename = "date", skip_serializing_if = "Option::is_none")]
    pub publish_date: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<&str>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            label: label.map(str::to_string),
            headline: None,
            source: None,
            publish_date: None,
        }
    }

    /// Blank optional fields count as absent, so they never create phantom classes.
    fn normalize(mut self) -> Self {
        fn blank_to_none(v: &mut Option<String>) {
            if v.as_deref().is_some_and(|s| s.trim().is_empty()) {
                *v = None;
            }
        }
        blank_to_none(&mut self.label);
        blank_to_none(&mut self.headline);
        blank_to_none(&mut self.source);
        blank_to_none(&mut self.publish_date);
        self
    }
}

/// An ordered document collection plus its class inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    class_names: Vec<String>,
}

impl Corpus {
    /// Builds a corpus whose class names are the sorted distinct labels.
    pub fn new(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let classes: BTreeSet<&str> = documents.iter().filter_map(|d| d.label.as_deref()).collect();
        let class_names = classes.into_iter().map(str::to_string).collect();
        Corpus::with_class_names(documents, class_names)
    }

    /// Builds a corpus with an explicit class order; every label must be listed.
    pub fn with_class_names(documents: Vec<Document>, class_names: Vec<String>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for name in &class_names {
            if !seen.insert(name.as_str()) {
                return Err(CorpusError::DuplicateClass(name.clone()));
            }
        }
        let mut ids = HashSet::new();
        for (i, doc) in documents.iter().enumerate() {
            let line = i as u64 + 1;
            if !ids.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId { line, id: doc.id.clone() });
            }
            if doc.text.trim().is_empty() {
                return Err(CorpusError::Malformed { line, reason: format!("document {:?} has empty text", doc.id) });
            }
            if let Some(label) = &doc.label {
                if !seen.contains(label.as_str()) {
                    return Err(CorpusError::UnknownLabel { id: doc.id.clone(), label: label.clone() });
                }
            }
        }
        Ok(Corpus { documents, class_names })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == label)
    }

    /// Writes the corpus as JSONL in document order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.documents {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Loads a corpus file; class names are the sorted distinct labels.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let documents = read_documents(path, format)?;
    Corpus::new(documents)
}

/// Loads a corpus file with a configured class order.
pub fn load_corpus_with_classes(path: &Path, format: CorpusFormat, class_names: Vec<String>) -> Result<Corpus, CorpusError> {
    let documents = read_documents(path, format)?;
    Corpus::with_class_names(documents, class_names)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

fn read_documents(path: &Path, format: CorpusFormat) -> Result<Vec<Document>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut docs = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    let mut push = |doc: Document, line: u64| -> Result<(), CorpusError> {
        let doc = doc.normalize();
        if doc.id.is_empty() {
            return Err(CorpusError::Malformed { line, reason: "empty id".into() });
        }
        if doc.text.trim().is_empty() {
            return Err(CorpusError::Malformed { line, reason: format!("document {:?} has empty text", doc.id) });
        }
        if !ids.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId { line, id: doc.id });
        }
        docs.push(doc);
        Ok(())
    };

    match format {
        CorpusFormat::Jsonl => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line_no = i as u64 + 1;
                let line = line.map_err(|e| CorpusError::Malformed { line: line_no, reason: e.to_string() })?;
                if line.trim().is_empty() {
                    continue;
                }
                let doc: Document = serde_json::from_str(&line)
                    .map_err(|e| CorpusError::Malformed { line: line_no, reason: e.to_string() })?;
                push(doc, line_no)?;
            }
        }
        CorpusFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
            let headers = reader
                .headers()
                .map_err(|e| CorpusError::Malformed { line: 1, reason: e.to_string() })?
                .clone();
            let mut record = csv::StringRecord::new();
            loop {
                match reader.read_record(&mut record) {
                    Ok(false) => break,
                    Ok(true) => {
                        let line = record.position().map(|p| p.line()).unwrap_or(0);
                        let doc: Document = record
                            .deserialize(Some(&headers))
                            .map_err(|e| CorpusError::Malformed { line, reason: e.to_string() })?;
                        push(doc, line)?;
                    }
                    Err(e) => {
                        return Err(CorpusError::Malformed {
                            line: e.position().map(|p| p.line()).unwrap_or(0),
                            reason: e.to_string(),
                        })
                    }
                }
            }
        }
    }
    Ok(docs)
}

/// Stratified, seed-controlled train/test split.
///
/// For each class, its documents are shuffled and the first `per_class_train`
/// go to training, the next `per_class_test` to testing. Unlabelled documents
/// are never selected. Both outputs keep the corpus' document order.
pub fn split_train_test(
    corpus: &Corpus,
    per_class_train: usize,
    per_class_test: usize,
    seed: u64,
) -> Result<(Corpus, Corpus), CorpusError> {
    let mut by_class: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, doc) in corpus.documents.iter().enumerate() {
        if let Some(label) = &doc.label {
            by_class.entry(label.as_str()).or_default().push(i);
        }
    }

    let required = per_class_train + per_class_test;
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (c, class) in corpus.class_names.iter().enumerate() {
        let mut members = by_class.remove(class.as_str()).unwrap_or_default();
        if members.len() < required {
            return Err(CorpusError::InsufficientDocuments {
                class: class.clone(),
                available: members.len(),
                required,
            });
        }
        let mut rng = rng::seeded(seed, rng::streams::SHUFFLE + 16 * c as u64);
        members.shuffle(&mut rng);
        train_idx.extend_from_slice(&members[..per_class_train]);
        test_idx.extend_from_slice(&members[per_class_train..required]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize]| Corpus {
        documents: idx.iter().map(|&i| corpus.documents[i].clone()).collect(),
        class_names: corpus.class_names.clone(),
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn labelled(n_per_class: usize, classes: &[&str]) -> Corpus {
        let mut docs = Vec::new();
        for c in classes {
            for i in 0..n_per_class {
                docs.push(Document::new(format!("{c}-{i}"), "text", Some(c)));
            }
        }
        Corpus::new(docs).unwrap()
    }

    #[test]
    fn loads_three_jsonl_records() {
        let f = write_tmp(
            "{\"id\":\"1\",\"text\":\"ক খ\",\"label\":\"sports\"}\n\
             {\"id\":\"2\",\"text\":\"গ\",\"label\":\"politics\",\"date\":\"2020-01-01\"}\n\
             {\"id\":\"3\",\"text\":\"ঘ\"}\n",
            ".jsonl",
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.class_names(), ["politics", "sports"]);
        assert_eq!(corpus.documents()[1].publish_date.as_deref(), Some("2020-01-01"));
        assert_eq!(corpus.documents()[2].label, None);
    }

    #[test]
    fn duplicate_id_names_its_line() {
        let f = write_tmp("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n", ".jsonl");
        match load_corpus(f.path(), CorpusFormat::Jsonl) {
            Err(CorpusError::DuplicateId { line, id }) => {
                assert_eq!(line, 2);
                assert_eq!(id, "a");
            }
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_record_reports_line() {
        let f = write_tmp("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\"}\n", ".jsonl");
        assert!(matches!(load_corpus(f.path(), CorpusFormat::Jsonl), Err(CorpusError::Malformed { line: 2, .. })));
    }

    #[test]
    fn csv_handles_quoted_commas_and_newlines() {
        let f = write_tmp(
            "id,text,label,headline\n1,\"hello, world\",a,\n2,\"multi\nline\",b,head\n3,plain,,\n",
            ".csv",
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.documents()[0].text, "hello, world");
        assert_eq!(corpus.documents()[1].text, "multi\nline");
        assert_eq!(corpus.documents()[0].headline, None);
        assert_eq!(corpus.documents()[2].label, None);
        assert_eq!(corpus.class_names(), ["a", "b"]);
    }

    #[test]
    fn csv_duplicate_reports_physical_line() {
        let f = write_tmp("id,text\n1,\"a\nb\"\n1,c\n", ".csv");
        match load_corpus(f.path(), CorpusFormat::Csv) {
            Err(CorpusError::DuplicateId { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!(matches!("xml".parse::<CorpusFormat>(), Err(CorpusError::UnknownFormat(_))));
        assert_eq!(CorpusFormat::from_path(Path::new("a/b.JSONL")).unwrap(), CorpusFormat::Jsonl);
    }

    #[test]
    fn configured_class_order_is_kept() {
        let docs = vec![Document::new("1", "x", Some("b")), Document::new("2", "y", Some("a"))];
        let corpus = Corpus::with_class_names(docs.clone(), vec!["b".into(), "a".into()]).unwrap();
        assert_eq!(corpus.class_index("a"), Some(1));
        assert!(matches!(
            Corpus::with_class_names(docs, vec!["a".into()]),
            Err(CorpusError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn eight_label_corpus_has_eight_classes() {
        let classes = ["a", "b", "c", "d", "e", "f", "g", "h"];
        assert_eq!(labelled(3, &classes).class_names().len(), 8);
    }

    #[test]
    fn split_counts_match_request() {
        let classes = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let corpus = labelled(20, &classes);
        let (train, test) = split_train_test(&corpus, 12, 5, 1).unwrap();
        assert_eq!(train.len(), 96);
        assert_eq!(test.len(), 40);
        let train_ids: HashSet<_> = train.documents().iter().map(|d| &d.id).collect();
        assert!(test.documents().iter().all(|d| !train_ids.contains(&d.id)));
    }

    #[test]
    fn split_with_zero_test_is_empty() {
        let corpus = labelled(4, &["a", "b"]);
        let (train, test) = split_train_test(&corpus, 4, 0, 9).unwrap();
        assert_eq!(train.len(), 8);
        assert!(test.is_empty());
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let corpus = labelled(30, &["a", "b", "c"]);
        let ids = |c: &Corpus| c.documents().iter().map(|d| d.id.clone()).collect::<Vec<_>>();
        let (a1, b1) = split_train_test(&corpus, 10, 10, 42).unwrap();
        let (a2, b2) = split_train_test(&corpus, 10, 10, 42).unwrap();
        assert_eq!(ids(&a1), ids(&a2));
        assert_eq!(ids(&b1), ids(&b2));
        let (a3, _) = split_train_test(&corpus, 10, 10, 43).unwrap();
        assert_ne!(ids(&a1), ids(&a3));
    }

    #[test]
    fn split_rejects_small_classes() {
        let corpus = labelled(4, &["a", "b"]);
        assert!(matches!(
            split_train_test(&corpus, 3, 2, 0),
            Err(CorpusError::InsufficientDocuments { available: 4, required: 5, .. })
        ));
    }

    #[test]
    fn jsonl_round_trip_keeps_order() {
        let corpus = labelled(3, &["x", "y"]);
        let mut buf = Vec::new();
        corpus.write_jsonl(&mut buf).unwrap();
        let f = write_tmp(std::str::from_utf8(&buf).unwrap(), ".jsonl");
        let back = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(back, corpus);
    }
}
