use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at {location}: {message}")]
    MalformedRecord { location: String, message: String },

    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("CoNLL-U parse error on line {line}: {message}")]
    Conllu { line: usize, message: String },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("degenerate spread: standard deviation of association scores is zero")]
    DegenerateSpread,

    #[error("token `{0}` is not in the embedding vocabulary")]
    OutOfVocabulary(String),

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("empty vocabulary: no token reaches min_count {min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("sentinel `{0}` already occurs in the corpus")]
    SentinelCollision(String),

    #[error("token {token} of sentence {sentence} is assigned more than one role")]
    OverlappingAssignment { sentence: String, token: usize },

    #[error("no parse for document `{doc_id}` sentence {sent_idx}")]
    MissingParse { doc_id: String, sent_idx: usize },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("backend protocol error: {0}")]
    Protocol(String),

    #[error("backend transport error: {0}")]
    Transport(String),

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("unknown annotator `{0}`")]
    UnknownAnnotator(String),

    #[error("no doubly-annotated items for iteration {0}")]
    NoDoubleAnnotations(u32),

    #[error("items still missing labels: {0:?}")]
    Unlabeled(Vec<String>),

    #[error("unadjudicated disagreements: {0:?}")]
    Unadjudicated(Vec<String>),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
