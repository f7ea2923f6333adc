use std::fmt;

use newsclass::autolabel::AutolabelError;
use newsclass::classifiers::ClassifierError;
use newsclass::corpus::CorpusError;
use newsclass::embeddings::EmbeddingError;
use newsclass::eval::EvalError;
use newsclass::features::FeatureError;
use newsclass::lda::LdaError;
use newsclass::preprocess::PreprocessError;
use newsclass::store::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Numeric => "numeric",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Data, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Numeric, message: message.into() }
    }

    /// Single line: `error kind=<kind> code=<n> msg="<escaped>"`.
    pub fn line(&self) -> String {
        format!("error kind={} code={} msg={:?}", self.kind.as_str(), self.kind.exit_code(), self.message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::InvalidMinDf => CliError::config(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::EmptyAfterPreprocess(_) => CliError::data(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::NonFinite(_) => CliError::numeric(e.to_string()),
            EmbeddingError::InvalidParam(_) => CliError::config(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<LdaError> for CliError {
    fn from(e: LdaError) -> Self {
        match e {
            LdaError::TooFewTopics(_) | LdaError::InvalidPrior | LdaError::EmptyGrid | LdaError::TooManyKeywords { .. } => {
                CliError::config(e.to_string())
            }
            LdaError::InvalidDistribution(_) => CliError::numeric(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<AutolabelError> for CliError {
    fn from(e: AutolabelError) -> Self {
        match e {
            AutolabelError::InvalidThreshold(_) | AutolabelError::NotBijective(_) | AutolabelError::SizeMismatch { .. } => {
                CliError::config(e.to_string())
            }
            AutolabelError::Lda(inner) => inner.into(),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::NonFinite => CliError::numeric(e.to_string()),
            ClassifierError::InvalidParam(_) | ClassifierError::InvalidK { .. } => CliError::config(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::data(e.to_string())
    }
}
