//! Article cleaning and tokenization.
//!
//! The pipeline runs in a fixed order: clean, tokenize, stem every token,
//! drop stopwords, then expand to word n-grams.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};

const DEFAULT_STOPWORDS: &str = include_str!("../data/bangla_stopwords.txt");
const DEFAULT_SUFFIXES: &str = include_str!("../data/bangla_suffixes.txt");

/// Stray code points removed by default: private-use bullet, zero-width
/// non-joiner, the Bangla currency-numerator glyph and a C1 control.
pub const DEFAULT_STRIP_CHARS: [char; 4] = ['\u{f06c}', '\u{200c}', '\u{09e5}', '\u{009d}'];

/// Separator between the words of a multi-word gram.
pub const GRAM_JOINER: char = '_';

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("document {0:?} has no tokens left after preprocessing")]
    EmptyAfterPreprocess(String),
    #[error("n-gram order must be 1, 2 or 3, got {0}")]
    InvalidNgramOrder(usize),
    #[error("list entry on line {line} of {path} contains whitespace")]
    InvalidEntry { path: String, line: usize },
}

/// Reads a one-entry-per-line list, skipping blanks and `#` comments.
fn parse_list(text: &str, origin: &str) -> Result<Vec<String>, PreprocessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.chars().any(char::is_whitespace) {
            return Err(PreprocessError::InvalidEntry { path: origin.to_string(), line: i + 1 });
        }
        out.push(line.to_string());
    }
    Ok(out)
}

fn read_list(path: &Path) -> Result<Vec<String>, PreprocessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PreprocessError::Io { path: path.display().to_string(), source })?;
    parse_list(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Stopwords(words.into_iter().map(Into::into).filter(|w: &String| !w.is_empty()).collect())
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        Ok(Self::from_words(read_list(path)?))
    }

    pub fn bangla_default() -> Self {
        Self::from_words(parse_list(DEFAULT_STOPWORDS, "<builtin stopwords>").expect("builtin list is valid"))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Rule-based stemmer that strips the longest listed suffix once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuffixStemmer {
    /// Longest first (in chars), ties in lexicographic order.
    suffixes: Vec<String>,
}

impl SuffixStemmer {
    /// Minimum length, in chars, of what remains after stripping.
    pub const MIN_STEM_CHARS: usize = 2;

    pub fn new<I, S>(suffixes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut suffixes: Vec<String> = suffixes.into_iter().map(Into::into).filter(|s: &String| !s.is_empty()).collect();
        suffixes.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
        suffixes.dedup();
        SuffixStemmer { suffixes }
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        Ok(Self::new(read_list(path)?))
    }

    pub fn bangla_default() -> Self {
        Self::new(parse_list(DEFAULT_SUFFIXES, "<builtin suffixes>").expect("builtin table is valid"))
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    /// Strips the longest matching suffix when at least two chars remain;
    /// otherwise the token comes back unchanged.
    pub fn stem<'a>(&self, token: &'a str) -> &'a str {
        let Some(suffix) = self.suffixes.iter().find(|s| token.ends_with(s.as_str())) else {
            return token;
        };
        let stem = &token[..token.len() - suffix.len()];
        if stem.chars().count() >= Self::MIN_STEM_CHARS {
            stem
        } else {
            token
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub stopwords: Stopwords,
    pub stemmer: SuffixStemmer,
    pub ngram_order: usize,
    pub strip_chars: BTreeSet<char>,
}

impl PreprocessConfig {
    /// Built-in Bangla stopwords and suffixes with the given n-gram order.
    pub fn bangla_default(ngram_order: usize) -> Result<Self, PreprocessError> {
        Self::new(Stopwords::bangla_default(), SuffixStemmer::bangla_default(), ngram_order)
    }

    pub fn new(stopwords: Stopwords, stemmer: SuffixStemmer, ngram_order: usize) -> Result<Self, PreprocessError> {
        if !(1..=3).contains(&ngram_order) {
            return Err(PreprocessError::InvalidNgramOrder(ngram_order));
        }
        Ok(PreprocessConfig {
            stopwords,
            stemmer,
            ngram_order,
            strip_chars: DEFAULT_STRIP_CHARS.into_iter().collect(),
        })
    }

    pub fn from_files(stopword_path: &Path, suffix_path: &Path, ngram_order: usize) -> Result<Self, PreprocessError> {
        Self::new(Stopwords::load(stopword_path)?, SuffixStemmer::load(suffix_path)?, ngram_order)
    }
}

/// A cleaned, tokenized article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedDoc {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn is_bangla_digit(c: char) -> bool {
    ('\u{09e6}'..='\u{09ef}').contains(&c)
}

/// Removes Latin letters, ASCII digits, newlines, ASCII punctuation and the
/// configured stray code points; Bangla digits become spaces. Space runs are
/// collapsed and the result is trimmed.
pub fn clean_text(raw: &str, config: &PreprocessConfig) -> String {
    let mut mapped = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_ascii_alphanumeric() || c == '\n' || c == '\r' || c.is_ascii_punctuation() || config.strip_chars.contains(&c) {
            continue;
        }
        mapped.push(if is_bangla_digit(c) { ' ' } else { c });
    }

    let mut out = String::with_capacity(mapped.len());
    let mut prev_space = false;
    for c in mapped.chars() {
        if c == ' ' {
            if !prev_space {
                out.push(' ');
            }
            prev_space = true;
        } else {
            out.push(c);
            prev_space = false;
        }
    }
    out.trim().to_string()
}

pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned.split_whitespace().map(str::to_string).collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stopwords: &Stopwords) -> Vec<String> {
    tokens.into_iter().filter(|t| !stopwords.contains(t)).collect()
}

/// Unigrams followed by every contiguous k-gram for 2 <= k <= n.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut out: Vec<String> = tokens.to_vec();
    let joiner = GRAM_JOINER.to_string();
    for k in 2..=n {
        out.extend(tokens.windows(k).map(|w| w.join(&joiner)));
    }
    out
}

/// Runs the full pipeline on one document.
pub fn preprocess_document(doc: &Document, config: &PreprocessConfig) -> Result<ProcessedDoc, PreprocessError> {
    let cleaned = clean_text(&doc.text, config);
    let stemmed: Vec<String> = tokenize(&cleaned)
        .iter()
        .map(|t| config.stemmer.stem(t).to_string())
        .collect();
    let kept = remove_stopwords(stemmed, &config.stopwords);
    if kept.is_empty() {
        return Err(PreprocessError::EmptyAfterPreprocess(doc.id.clone()));
    }
    Ok(ProcessedDoc {
        id: doc.id.clone(),
        tokens: ngrams(&kept, config.ngram_order),
        label: doc.label.clone(),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreprocessOutput {
    pub docs: Vec<ProcessedDoc>,
    /// Ids of documents dropped because nothing survived preprocessing.
    pub dropped: Vec<String>,
}

/// Preprocesses a whole corpus, dropping (and logging) empty results.
pub fn preprocess_corpus(corpus: &Corpus, config: &PreprocessConfig) -> PreprocessOutput {
    let results: Vec<_> = corpus
        .documents()
        .par_iter()
        .map(|d| preprocess_document(d, config))
        .collect();
    let mut out = PreprocessOutput::default();
    for r in results {
        match r {
            Ok(doc) => out.docs.push(doc),
            Err(PreprocessError::EmptyAfterPreprocess(id)) => {
                log::warn!("dropping document {id:?}: empty after preprocessing");
                out.dropped.push(id);
            }
            Err(e) => unreachable!("per-document preprocessing only fails on empty output: {e}"),
        }
    }
    out
}
