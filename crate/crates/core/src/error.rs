use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad error category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Parse,
    Dataset,
    Embedding,
    Similarity,
    Collation,
    Planning,
    Training,
    Config,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("query `{query}` references document `{document}` which is not in the corpus")]
    DanglingDocument { query: String, document: String },

    #[error("relevant_docs names query `{0}` which is not in queries")]
    UnknownQuery(String),

    #[error("query `{0}` has no relevant documents")]
    NoRelevantDocuments(String),

    #[error("empty identifier in {0}")]
    EmptyIdentifier(&'static str),

    #[error("record {record} (`{id}`): dimension {found}, expected {expected}")]
    DimensionMismatch {
        record: usize,
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("record {record} (`{id}`): non-finite component at index {index}")]
    NonFinite { record: usize, id: String, index: usize },

    #[error("vector `{0}` has zero norm")]
    ZeroNorm(String),

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("embedding file contains no records")]
    EmptyEmbeddings,

    #[error("unknown identifier `{0}`")]
    UnknownId(String),

    #[error("vector dimensions differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("no relevant document among the ranked candidates")]
    NoRelevantCandidate,

    #[error("need {needed} non-relevant candidates, have {available}")]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("too few non-relevant documents (need {needed}) for queries: {}", queries.join(", "))]
    UnderResourcedQueries { needed: usize, queries: Vec<String> },

    #[error("missing collation entry for query `{0}`")]
    MissingEntry(String),

    #[error("no query has positive rank 0; balanced batches are impossible")]
    NoPositives,

    #[error("dataset has no queries")]
    NoQueries,

    #[error("batch size {requested} is below the smallest effective batch size {b_min}")]
    BatchBelowMinimum { requested: usize, b_min: usize },

    #[error("batch size {requested} exceeds the number of queries {n_queries}")]
    BatchTooLarge { requested: usize, n_queries: usize },

    #[error("zero token count in plain text of pair {0}")]
    ZeroPlainTokens(usize),

    #[error("no text pairs given")]
    NoPairs,

    #[error("instruction template must contain exactly one `{{text}}` placeholder, found {0}")]
    Placeholder(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } => ErrorKind::Io,
            Parse { .. } => ErrorKind::Parse,
            DanglingDocument { .. } | UnknownQuery(_) | NoRelevantDocuments(_) | EmptyIdentifier(_) => {
                ErrorKind::Dataset
            }
            DimensionMismatch { .. } | NonFinite { .. } | ZeroNorm(_) | DuplicateId(_) | EmptyEmbeddings => {
                ErrorKind::Embedding
            }
            UnknownId(_) | LengthMismatch(..) | NoRelevantCandidate => ErrorKind::Similarity,
            InsufficientCandidates { .. } | UnderResourcedQueries { .. } | MissingEntry(_) => ErrorKind::Collation,
            NoPositives | NoQueries | BatchBelowMinimum { .. } | BatchTooLarge { .. } => ErrorKind::Planning,
            ZeroPlainTokens(_) | NoPairs | Placeholder(_) | Config(_) => ErrorKind::Config,
            Training(_) => ErrorKind::Training,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
