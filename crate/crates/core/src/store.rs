//! Versioned text persistence for trained artifacts.
//!
//! Every file has the shape
//!
//! ```text
//! #newsclass-artifact kind=<kind> version=<n> key=value ...
//! <body lines, format owned by the artifact type>
//! #end checksum=<16 hex digits>
//! ```
//!
//! The checksum is 64-bit FNV-1a over the body bytes. The header is read and
//! checked on its own before the body is loaded, so opening a file of the
//! wrong kind never allocates model-sized buffers. Reals are written with nine
//! significant digits.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::features::Vocabulary;

pub const MAGIC: &str = "#newsclass-artifact";
const TRAILER: &str = "#end checksum=";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not an artifact file: {0}")]
    BadHeader(String),
    #[error("expected a {expected} artifact, found {found}")]
    WrongKind { expected: ArtifactKind, found: ArtifactKind },
    #[error("{kind} artifact version {found} is not supported (reader knows {expected})")]
    VersionMismatch { kind: ArtifactKind, expected: u32, found: u32 },
    #[error("artifact is truncated (missing checksum trailer)")]
    Truncated,
    #[error("checksum mismatch: file says {expected:016x}, body hashes to {found:016x}")]
    Checksum { expected: u64, found: u64 },
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing header parameter {0:?}")]
    MissingParam(String),
}

impl StoreError {
    pub fn parse(line: usize, reason: impl Into<String>) -> Self {
        StoreError::Parse { line, reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArtifactKind {
    Vocab,
    Embedding,
    Subword,
    Docvec,
    Lda,
    Linear,
    Knn,
    Autodata,
}

impl ArtifactKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::Vocab => "vocab",
            ArtifactKind::Embedding => "embedding",
            ArtifactKind::Subword => "subword",
            ArtifactKind::Docvec => "docvec",
            ArtifactKind::Lda => "lda",
            ArtifactKind::Linear => "linear",
            ArtifactKind::Knn => "knn",
            ArtifactKind::Autodata => "autodata",
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtifactKind {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "vocab" => ArtifactKind::Vocab,
            "embedding" => ArtifactKind::Embedding,
            "subword" => ArtifactKind::Subword,
            "docvec" => ArtifactKind::Docvec,
            "lda" => ArtifactKind::Lda,
            "linear" => ArtifactKind::Linear,
            "knn" => ArtifactKind::Knn,
            "autodata" => ArtifactKind::Autodata,
            other => return Err(StoreError::BadHeader(format!("unknown artifact kind {other:?}"))),
        })
    }
}

/// First line of every artifact: kind, format version and the parameters
/// needed to re-run the training that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactHeader {
    pub kind: ArtifactKind,
    pub version: u32,
    pub params: BTreeMap<String, String>,
}

pub(crate) fn escape(v: &str) -> String {
    v.replace('%', "%25").replace(' ', "%20").replace('\t', "%09").replace('\n', "%0A")
}

pub(crate) fn unescape(v: &str) -> String {
    v.replace("%0A", "\n").replace("%09", "\t").replace("%20", " ").replace("%25", "%")
}

impl ArtifactHeader {
    pub fn to_line(&self) -> String {
        let mut line = format!("{MAGIC} kind={} version={}", self.kind, self.version);
        for (k, v) in &self.params {
            line.push(' ');
            line.push_str(k);
            line.push('=');
            line.push_str(&escape(v));
        }
        line
    }

    pub fn parse_line(line: &str) -> Result<Self, StoreError> {
        let mut parts = line.trim_end().split(' ');
        if parts.next() != Some(MAGIC) {
            return Err(StoreError::BadHeader("missing artifact magic".into()));
        }
        let mut kind = None;
        let mut version = None;
        let mut params = BTreeMap::new();
        for part in parts.filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| StoreError::BadHeader(format!("header field {part:?} is not key=value")))?;
            match k {
                "kind" => kind = Some(v.parse::<ArtifactKind>()?),
                "version" => {
                    version = Some(v.parse::<u32>().map_err(|_| StoreError::BadHeader(format!("bad version {v:?}")))?)
                }
                _ => {
                    params.insert(k.to_string(), unescape(v));
                }
            }
        }
        Ok(ArtifactHeader {
            kind: kind.ok_or_else(|| StoreError::BadHeader("missing kind".into()))?,
            version: version.ok_or_else(|| StoreError::BadHeader("missing version".into()))?,
            params,
        })
    }

    pub fn param(&self, key: &str) -> Result<&str, StoreError> {
        self.params.get(key).map(String::as_str).ok_or_else(|| StoreError::MissingParam(key.into()))
    }

    pub fn param_as<T: FromStr>(&self, key: &str) -> Result<T, StoreError> {
        let raw = self.param(key)?;
        raw.parse().map_err(|_| StoreError::BadHeader(format!("parameter {key}={raw:?} does not parse")))
    }
}

/// Something that can be written to and read back from an artifact file.
pub trait Artifact: Sized {
    const KIND: ArtifactKind;
    const VERSION: u32 = 1;

    /// Creation parameters echoed into the header.
    fn params(&self) -> BTreeMap<String, String>;

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()>;

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError>;
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Real number with nine significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn to_bytes<A: Artifact>(artifact: &A) -> Vec<u8> {
    let header = ArtifactHeader { kind: A::KIND, version: A::VERSION, params: artifact.params() };
    let mut body = Vec::new();
    artifact.write_body(&mut body).expect("writing to memory cannot fail");
    if !body.is_empty() && !body.ends_with(b"\n") {
        body.push(b'\n');
    }
    let mut out = header.to_line().into_bytes();
    out.push(b'\n');
    let checksum = fnv1a64(&body);
    out.extend_from_slice(&body);
    out.extend_from_slice(format!("{TRAILER}{checksum:016x}\n").as_bytes());
    out
}

fn check_header<A: Artifact>(header: &ArtifactHeader) -> Result<(), StoreError> {
    if header.kind != A::KIND {
        return Err(StoreError::WrongKind { expected: A::KIND, found: header.kind });
    }
    if header.version != A::VERSION {
        return Err(StoreError::VersionMismatch { kind: A::KIND, expected: A::VERSION, found: header.version });
    }
    Ok(())
}

/// Parses an artifact whose header line has already been split off.
fn parse_body<A: Artifact>(header: &ArtifactHeader, rest: &str) -> Result<A, StoreError> {
    let body_text = rest.trim_end_matches('\n');
    let (body, trailer) = match body_text.rfind('\n') {
        Some(pos) => (&rest[..pos + 1], &body_text[pos + 1..]),
        None => ("", body_text),
    };
    let expected = trailer
        .strip_prefix(TRAILER)
        .ok_or(StoreError::Truncated)
        .and_then(|hex| u64::from_str_radix(hex.trim(), 16).map_err(|_| StoreError::Truncated))?;
    let found = fnv1a64(body.as_bytes());
    if expected != found {
        return Err(StoreError::Checksum { expected, found });
    }
    let mut lines = BodyLines::new(body);
    A::read_body(header, &mut lines)
}

pub fn from_bytes<A: Artifact>(bytes: &[u8]) -> Result<A, StoreError> {
    let text = std::str::from_utf8(bytes).map_err(|_| StoreError::BadHeader("artifact is not UTF-8".into()))?;
    let (first, rest) = text.split_once('\n').ok_or(StoreError::Truncated)?;
    let header = ArtifactHeader::parse_line(first)?;
    check_header::<A>(&header)?;
    parse_body(&header, rest)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

/// Reads only the header line of an artifact file.
pub fn read_header(path: &Path) -> Result<ArtifactHeader, StoreError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(io_err(path))?;
    ArtifactHeader::parse_line(&first)
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn save<A: Artifact>(artifact: &A, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, &to_bytes(artifact))
}

pub fn load<A: Artifact>(path: &Path) -> Result<A, StoreError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(io_err(path))?;
    let header = ArtifactHeader::parse_line(&first)?;
    check_header::<A>(&header)?;
    let mut rest = String::new();
    reader.read_to_string(&mut rest).map_err(io_err(path))?;
    parse_body(&header, &rest)
}

/// Line cursor over an artifact body with 1-based file line numbers.
pub struct BodyLines<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> BodyLines<'a> {
    fn new(body: &'a str) -> Self {
        // line 1 is the header
        BodyLines { lines: body.lines(), line_no: 1 }
    }

    pub fn line_no(&self) -> usize {
        self.line_no
    }

    pub fn next_line(&mut self) -> Result<&'a str, StoreError> {
        self.line_no += 1;
        self.lines.next().ok_or_else(|| StoreError::parse(self.line_no, "unexpected end of body"))
    }

    /// Next line split on whitespace.
    pub fn fields(&mut self) -> Result<Vec<&'a str>, StoreError> {
        Ok(self.next_line()?.split_whitespace().collect())
    }

    pub fn parse<T: FromStr>(&self, raw: &str, what: &str) -> Result<T, StoreError> {
        raw.parse().map_err(|_| StoreError::parse(self.line_no, format!("bad {what} {raw:?}")))
    }

    /// A line of exactly `n` parsed values.
    pub fn values<T: FromStr>(&mut self, n: usize, what: &str) -> Result<Vec<T>, StoreError> {
        let fields = self.fields()?;
        if fields.len() != n {
            return Err(StoreError::parse(self.line_no, format!("expected {n} {what} values, found {}", fields.len())));
        }
        fields.iter().map(|f| self.parse(f, what)).collect()
    }

    /// A `key v1 .. v_dim` line.
    pub fn keyed_reals(&mut self, dim: usize) -> Result<(&'a str, Vec<f64>), StoreError> {
        let fields = self.fields()?;
        if fields.len() != dim + 1 {
            return Err(StoreError::parse(self.line_no, format!("expected key and {dim} values, found {} fields", fields.len())));
        }
        let values = fields[1..].iter().map(|f| self.parse(f, "real")).collect::<Result<_, _>>()?;
        Ok((fields[0], values))
    }

    /// Remaining lines, numbered, for readers written against plain iterators.
    pub fn numbered(&mut self) -> impl Iterator<Item = (usize, String)> + use<'_, 'a> {
        std::iter::from_fn(move || {
            let line = self.lines.next()?;
            self.line_no += 1;
            Some((self.line_no, line.to_string()))
        })
    }

    pub fn is_exhausted(&mut self) -> bool {
        self.lines.clone().next().is_none()
    }
}

/// Writes `key v1 .. v_dim`.
pub fn write_keyed_reals(out: &mut dyn Write, key: &str, values: &[f64]) -> std::io::Result<()> {
    out.write_all(key.as_bytes())?;
    for v in values {
        write!(out, " {}", fmt_real(*v))?;
    }
    out.write_all(b"\n")
}

impl Artifact for Vocabulary {
    const KIND: ArtifactKind = ArtifactKind::Vocab;

    fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::new();
        if let Some(cap) = self.max_features() {
            p.insert("max_features".into(), cap.to_string());
        }
        p
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        self.write_text(out)
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        let cap = header.params.get("max_features").map(|v| v.parse::<usize>()).transpose().map_err(|_| {
            StoreError::BadHeader("bad max_features".into())
        })?;
        read_vocab_block(body, cap)
    }
}

/// Reads a vocabulary block embedded in a larger artifact body.
pub fn read_vocab_block(body: &mut BodyLines<'_>, max_features: Option<usize>) -> Result<Vocabulary, StoreError> {
    let start = body.line_no() + 1;
    let mut numbered = body.numbered();
    let header_line = numbered.next().ok_or_else(|| StoreError::parse(start, "missing vocabulary header"))?;
    let v: usize = header_line
        .1
        .split_whitespace()
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| StoreError::parse(header_line.0, "bad vocabulary header"))?;
    let mut block = std::iter::once(header_line).chain(numbered.take(v));
    Vocabulary::read_text(&mut block, max_features).map_err(|e| match e {
        crate::features::FeatureError::Parse { line, reason } => StoreError::Parse { line, reason },
        other => StoreError::parse(start, other.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::ProcessedDoc;

    fn vocab() -> Vocabulary {
        let docs = vec![
            ProcessedDoc { id: "1".into(), tokens: vec!["ক".into(), "খ".into(), "ক".into()], label: None },
            ProcessedDoc { id: "2".into(), tokens: vec!["খ".into(), "গ_ঘ".into()], label: None },
        ];
        Vocabulary::build(&docs, Some(10), 1).unwrap()
    }

    #[test]
    fn header_line_round_trip() {
        let mut params = BTreeMap::new();
        params.insert("seed".into(), "7".into());
        params.insert("note".into(), "a b%c".into());
        let h = ArtifactHeader { kind: ArtifactKind::Lda, version: 1, params };
        let line = h.to_line();
        assert!(line.starts_with("#newsclass-artifact kind=lda version=1"));
        assert_eq!(ArtifactHeader::parse_line(&line).unwrap(), h);
    }

    #[test]
    fn vocabulary_round_trip_is_exact() {
        let v = vocab();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        save(&v, &path).unwrap();
        let back: Vocabulary = load(&path).unwrap();
        assert_eq!(back, v);
        for t in v.terms() {
            assert_eq!(back.id(t), v.id(t));
        }
        assert_eq!(read_header(&path).unwrap().kind, ArtifactKind::Vocab);
    }

    #[test]
    fn truncated_and_corrupted_files_are_rejected() {
        let bytes = to_bytes(&vocab());
        let text = String::from_utf8(bytes.clone()).unwrap();
        let cut = text.rfind("#end").unwrap();
        assert!(matches!(from_bytes::<Vocabulary>(&bytes[..cut]), Err(StoreError::Truncated)));
        let corrupted = text.replacen("খ 1 2 2", "খ 1 2 3", 1);
        assert_ne!(corrupted, text);
        assert!(matches!(from_bytes::<Vocabulary>(corrupted.as_bytes()), Err(StoreError::Checksum { .. })));
    }

    #[test]
    fn wrong_kind_and_version_fail_on_header() {
        let text = String::from_utf8(to_bytes(&vocab())).unwrap();
        let as_lda = text.replacen("kind=vocab", "kind=lda", 1);
        assert!(matches!(
            from_bytes::<Vocabulary>(as_lda.as_bytes()),
            Err(StoreError::WrongKind { expected: ArtifactKind::Vocab, found: ArtifactKind::Lda })
        ));
        let v2 = text.replacen("version=1", "version=2", 1);
        assert!(matches!(from_bytes::<Vocabulary>(v2.as_bytes()), Err(StoreError::VersionMismatch { found: 2, .. })));
        assert!(matches!(from_bytes::<Vocabulary>(b"hello\nworld\n"), Err(StoreError::BadHeader(_))));
    }

    #[test]
    fn real_format_has_nine_significant_digits() {
        assert_eq!(fmt_real(0.123456789123), "1.23456789e-1");
        let v: f64 = fmt_real(-3.141592653589793).parse().unwrap();
        assert!((v + std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
