//! Seeded synthetic corpora with known structure, used by tests and demos.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document};
use crate::preprocess::{ProcessedDoc, Stopwords, SuffixStemmer};
use crate::rng;

pub const NEWS_CLASSES: [&str; 8] =
    ["Economy", "Education", "Entertainment", "International", "National", "Politics", "Science&Technology", "Sports"];

const CONSONANTS: [char; 27] = [
    'ক', 'খ', 'গ', 'ঘ', 'চ', 'ছ', 'জ', 'ঝ', 'ট', 'ঠ', 'ড', 'ঢ', 'ত', 'থ', 'দ', 'ধ', 'ন', 'প', 'ফ', 'ব', 'ভ', 'ম', 'র',
    'ল', 'শ', 'স', 'হ',
];
const VOWEL_SIGNS: [Option<char>; 8] =
    [None, Some('া'), Some('ি'), Some('ী'), Some('ু'), Some('ূ'), Some('ে'), Some('ো')];
const LATIN_NOISE: [&str; 6] = ["BBC", "Dhaka", "news", "AFP", "update", "http"];
const PUNCT_NOISE: [&str; 5] = [",", ".", "!", "?", ";"];

/// Draws distinct pseudo-Bangla words that the default pipeline leaves
/// untouched: not stopwords, not changed by stemming.
pub struct WordFactory {
    seen: HashSet<String>,
    stopwords: Stopwords,
    stemmer: SuffixStemmer,
}

impl Default for WordFactory {
    fn default() -> Self {
        WordFactory { seen: HashSet::new(), stopwords: Stopwords::bangla_default(), stemmer: SuffixStemmer::bangla_default() }
    }
}

impl WordFactory {
    pub fn word(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let syllables = rng.random_range(2..=4);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*CONSONANTS.choose(rng).expect("non-empty"));
                if let Some(v) = *VOWEL_SIGNS.choose(rng).expect("non-empty") {
                    w.push(v);
                }
            }
            if self.stemmer.stem(&w) == w && !self.stopwords.contains(&w) && self.seen.insert(w.clone()) {
                return w;
            }
        }
    }

    pub fn words(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        (0..n).map(|_| self.word(rng)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsParams {
    pub docs_per_class: usize,
    pub class_vocab: usize,
    pub noise_vocab: usize,
    /// Share of content tokens drawn from the shared noise vocabulary.
    pub noise_ratio: f64,
    /// Share of documents that also draw class tokens from a second class.
    pub mixed_ratio: f64,
    /// Range of the second class's share of class tokens in a mixed document.
    pub secondary_share: (f64, f64),
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for NewsParams {
    fn default() -> Self {
        NewsParams { docs_per_class: 200, class_vocab: 60, noise_vocab: 120, noise_ratio: 0.3, mixed_ratio: 0.3, secondary_share: (0.2, 0.45), min_len: 40, max_len: 80, seed: 42 }
    }
}

/// Eight-class labelled corpus. Each content token comes from the document's
/// class vocabulary with probability `1 - noise_ratio`, otherwise from a
/// shared noise vocabulary. A `mixed_ratio` share of documents takes part of
/// its class tokens from a second, randomly chosen class. Raw text also carries stopwords, Latin words,
/// digits and punctuation that preprocessing removes. Documents are
/// interleaved by class.
pub fn news_corpus(params: &NewsParams) -> Corpus {
    let mut r = rng::seeded(params.seed, 0);
    let mut factory = WordFactory::default();
    let class_words: Vec<Vec<String>> = NEWS_CLASSES.iter().map(|_| factory.words(params.class_vocab, &mut r)).collect();
    let noise = factory.words(params.noise_vocab, &mut r);
    // stem-stable stopwords, so they are removed rather than stemmed into new tokens
    let stopwords = ["এবং", "এই", "জন্য", "তিনি", "অথবা", "কিন্তু"];
    let mut docs = Vec::with_capacity(params.docs_per_class * NEWS_CLASSES.len());
    for i in 0..params.docs_per_class {
        for (c, class) in NEWS_CLASSES.iter().enumerate() {
            let len = r.random_range(params.min_len..=params.max_len);
            let secondary = r.random_bool(params.mixed_ratio).then(|| {
                let other = (c + 1 + r.random_range(0..NEWS_CLASSES.len() - 1)) % NEWS_CLASSES.len();
                (other, r.random_range(params.secondary_share.0..=params.secondary_share.1))
            });
            let mut parts: Vec<String> = Vec::with_capacity(len + len / 4);
            for _ in 0..len {
                let pool = if r.random_bool(params.noise_ratio) {
                    &noise
                } else {
                    match secondary {
                        Some((other, share)) if r.random_bool(share) => &class_words[other],
                        _ => &class_words[c],
                    }
                };
                let mut token = pool.choose(&mut r).expect("non-empty vocabulary").clone();
                if r.random_bool(0.05) {
                    token.push_str(PUNCT_NOISE.choose(&mut r).expect("non-empty"));
                }
                parts.push(token);
                match r.random_range(0..20) {
                    0 => parts.push(stopwords.choose(&mut r).expect("non-empty").to_string()),
                    1 => parts.push(LATIN_NOISE.choose(&mut r).expect("non-empty").to_string()),
                    2 => parts.push(format!("২০{}", r.random_range(10..25))),
                    _ => {}
                }
            }
            let mut doc = Document::new(format!("syn-{c}-{i:04}"), parts.join(" "), Some(class));
            doc.headline = Some(parts[..5].join(" "));
            doc.source = Some("synthetic".into());
            docs.push(doc);
        }
    }
    Corpus::with_class_names(docs, NEWS_CLASSES.iter().map(|s| s.to_string()).collect())
        .expect("labels are drawn from the class list")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedParams {
    pub topics: usize,
    pub words_per_topic: usize,
    pub docs: usize,
    pub doc_len: usize,
    /// Probability mass of each document's main topic.
    pub main_weight: f64,
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams { topics: 3, words_per_topic: 30, docs: 300, doc_len: 100, main_weight: 0.8, seed: 7 }
    }
}

/// Documents drawn from topics with disjoint vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub docs: Vec<ProcessedDoc>,
    pub topic_words: Vec<Vec<String>>,
    pub main_topic: Vec<usize>,
}

impl PlantedCorpus {
    /// Planted topic owning `word`, if any.
    pub fn topic_of(&self, word: &str) -> Option<usize> {
        self.topic_words.iter().position(|ws| ws.iter().any(|w| w == word))
    }
}

/// Each document has a main topic (round robin) holding `main_weight` of its
/// mass; the rest is spread evenly. Words are uniform within a topic.
pub fn planted_topics(params: &PlantedParams) -> PlantedCorpus {
    let mut r = rng::seeded(params.seed, 0);
    let mut factory = WordFactory::default();
    let topic_words: Vec<Vec<String>> = (0..params.topics).map(|_| factory.words(params.words_per_topic, &mut r)).collect();
    let rest = (1.0 - params.main_weight) / (params.topics - 1).max(1) as f64;
    let mut docs = Vec::with_capacity(params.docs);
    let mut main_topic = Vec::with_capacity(params.docs);
    for d in 0..params.docs {
        let main = d % params.topics;
        let tokens = (0..params.doc_len)
            .map(|_| {
                let mut u = r.random::<f64>();
                let mut t = 0;
                for k in 0..params.topics {
                    let w = if k == main { params.main_weight } else { rest };
                    if u < w {
                        t = k;
                        break;
                    }
                    u -= w;
                    t = k;
                }
                topic_words[t].choose(&mut r).expect("non-empty topic").clone()
            })
            .collect();
        docs.push(ProcessedDoc { id: format!("planted-{d:04}"), tokens, label: Some(format!("topic{main}")) });
        main_topic.push(main);
    }
    PlantedCorpus { docs, topic_words, main_topic }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{preprocess_corpus, PreprocessConfig};

    #[test]
    fn news_corpus_shape() {
        let p = NewsParams { docs_per_class: 5, ..NewsParams::default() };
        let c = news_corpus(&p);
        assert_eq!(c.len(), 40);
        assert_eq!(c.class_names().len(), 8);
        assert_eq!(news_corpus(&p), c);
        assert_eq!(c.documents()[1].label.as_deref(), Some(NEWS_CLASSES[1]));
    }

    #[test]
    fn preprocessing_keeps_only_generated_words() {
        let p = NewsParams { docs_per_class: 3, ..NewsParams::default() };
        let c = news_corpus(&p);
        let out = preprocess_corpus(&c, &PreprocessConfig::bangla_default(1).unwrap());
        assert!(out.dropped.is_empty());
        let mut r = rng::seeded(p.seed, 0);
        let mut f = WordFactory::default();
        let all: HashSet<String> = f.words(8 * p.class_vocab + p.noise_vocab, &mut r).into_iter().collect();
        for d in &out.docs {
            assert!(d.tokens.len() >= p.min_len && d.tokens.len() <= p.max_len);
            assert!(d.tokens.iter().all(|t| all.contains(t)), "{:?}", d.tokens);
        }
    }

    #[test]
    fn planted_vocabularies_are_disjoint() {
        let pc = planted_topics(&PlantedParams::default());
        assert_eq!(pc.docs.len(), 300);
        let mut seen = HashSet::new();
        for ws in &pc.topic_words {
            assert_eq!(ws.len(), 30);
            for w in ws {
                assert!(seen.insert(w.clone()));
            }
        }
        let d = &pc.docs[4];
        let main_share = d.tokens.iter().filter(|t| pc.topic_of(t) == Some(pc.main_topic[4])).count();
        assert!(main_share > 50);
    }
}
