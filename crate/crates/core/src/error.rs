use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    /// Tree document or structure violates an invariant; carries the id of
    /// the offending node so documents can be fixed by hand.
    #[error("node {node}: {reason}")]
    InvalidTree { node: u64, reason: String },

    /// Document-level problem that cannot be pinned on a single node.
    #[error("invalid tree document: {0}")]
    InvalidTreeDocument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Compilation saw a categorical equality test; the tree must go through
    /// categorical expansion first.
    #[error("node {node}: categorical test must be expanded before compilation")]
    UnexpandedCategorical { node: u64 },

    /// A categorical domain is unusable (too small, duplicates, target
    /// missing, or a value outside the declared set).
    #[error("feature {feature}: {reason}")]
    CategoricalDomain { feature: usize, reason: String },

    #[error("input length {got} does not match expected feature count {expected}")]
    InputLength { expected: usize, got: usize },

    #[error("undefined test result at position {index} (NaN)")]
    UndefinedTestResult { index: usize },

    #[error("input contains NaN at position {index}")]
    NanInput { index: usize },

    #[error("template row {row} has no nonzero entries")]
    ZeroTemplateRow { row: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("machines operate on different feature spaces ({left} vs {right})")]
    FeatureSpaceMismatch { left: usize, right: usize },

    #[error("forest contains no trees")]
    EmptyForest,

    #[error("operation requires numeric leaf values")]
    NumericLeavesRequired,

    #[error("categorical features are not supported by the continuous relaxation; \
             evaluate the exact machine instead")]
    SoftCategorical,

    #[error("not a tree template matrix: {0}")]
    NotTreeTemplate(String),

    #[error("column {column} has no row with the requested sign")]
    EmptySubtreeSide { column: usize },

    #[error("invalid machine document: {0}")]
    InvalidMachine(String),

    #[error("invalid selection-prediction model: {0}")]
    InvalidModel(String),

    #[error("no selected expert: similarity mass is zero")]
    NoSelectedExpert,

    #[error("gradient is not available for this model configuration: {0}")]
    GradientUnavailable(String),

    /// Wraps a per-row failure in batch evaluation with the offending row.
    #[error("row {row}: {source}")]
    BatchRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    /// Evaluation paths disagreed during a benchmark self-check. This is a
    /// correctness tripwire, not a performance failure.
    #[error("evaluation paths disagree at row {row}: {detail}")]
    PathDisagreement { row: usize, detail: String },
}

impl Error {
    pub(crate) fn at_row(self, row: usize) -> Error {
        Error::BatchRow {
            row,
            source: Box::new(self),
        }
    }
}
