//! Writes the 8-class synthetic news corpus as JSONL.
//!
//! `cargo run --example synthetic_corpus -- data/synthetic_corpus.jsonl [seed]`

use std::io::BufWriter;

use newsclass::synthetic::{news_corpus, NewsParams};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "synthetic_corpus.jsonl".into());
    let mut params = NewsParams::default();
    if let Some(seed) = args.next() {
        params.seed = seed.parse().expect("seed must be an integer");
    }
    let corpus = news_corpus(&params);
    corpus.write_jsonl(BufWriter::new(std::fs::File::create(&path)?))?;
    eprintln!("wrote {} documents to {path}", corpus.len());
    Ok(())
}
