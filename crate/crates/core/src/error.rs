use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 at byte {offset}")]
    Encoding { path: PathBuf, offset: usize },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("ragged vectors: expected dimension {expected}, found {found} (id {id})")]
    RaggedVectors { expected: usize, found: usize, id: u64 },

    #[error("non-finite value in vector {0}")]
    NonFinite(u64),

    #[error("duplicate vector id {0}")]
    DuplicateId(u64),

    #[error("no vectors")]
    NoVectors,

    #[error("requested {k} clusters for {m} points")]
    TooManyClusters { k: usize, m: usize },

    #[error("similarity matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("catalog has {catalog} items but the group budget is {k}")]
    CatalogTooSmall { catalog: usize, k: usize },

    #[error("item `{0}` is not in the catalog")]
    UnknownItem(String),

    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
