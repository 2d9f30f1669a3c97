use alloc::boxed::Box;
use alloc::string::String;

use crate::manifest::Role;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("store dimension must be positive")]
    ZeroDimension,

    #[error("matrix has {values} values, not a multiple of {rows} rows x {dim} dims")]
    ShapeMismatch { rows: usize, dim: usize, values: usize },

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("zero-norm vector `{0}`")]
    ZeroNorm(String),

    #[error("dangling parent `{parent}`")]
    DanglingParent { parent: String },

    #[error("parent `{parent}` of generated entry is not an original image")]
    ParentNotOriginal { parent: String },

    #[error("generated entry has no parent_id")]
    MissingParent,

    #[error("parent_id set on a non-generated entry")]
    UnexpectedParent,

    #[error("split differs from parent `{parent}`")]
    SplitMismatch { parent: String },

    #[error("role mismatch for `{id}`: expected {expected}, found {found}")]
    RoleMismatch { id: String, expected: &'static str, found: Role },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("label `{0}` is not in the label order")]
    LabelNotInOrder(String),

    #[error("unknown role `{0}`")]
    UnknownRole(String),

    #[error("unknown split `{0}`")]
    UnknownSplit(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("query `{0}` has no children in the corpus")]
    NoRelevant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("record {index}: {source}")]
    AtRecord {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(index: usize, source: Error) -> Self {
        Error::AtRecord { index, source: Box::new(source) }
    }
}
