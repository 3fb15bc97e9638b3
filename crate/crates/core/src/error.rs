use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("predicted probability of action {action} for item {item} is zero")]
    ZeroLikelihood { item: usize, action: usize },

    #[error("reference distribution puts mass on action {action} of item {item} where the candidate has none")]
    InfiniteDivergence { item: usize, action: usize },

    #[error("mapping has {got} entries but the menu has {expected}")]
    MenuMismatch { expected: usize, got: usize },

    #[error("prediction or outcome shape does not match problem kind {0:?}")]
    KindMismatch(crate::problem::ProblemKind),

    #[error("invalid menu item: {0}")]
    InvalidItem(String),

    #[error("invalid mapping: {0}")]
    InvalidMapping(String),

    #[error("model does not apply to this item: {0}")]
    DomainMismatch(String),

    #[error("rejection sampler failed {0} consecutive times")]
    RejectionBudgetExceeded(u64),

    #[error("target coincides with the naive mapping, f-discrepancy undefined")]
    DegenerateTarget,

    #[error("f-discrepancy {0} exceeds 1; the naive mapping is not nested in the model")]
    NestingViolation(f64),

    #[error("naive benchmark is not worse than the unrestricted benchmark (denominator {0})")]
    NaiveNotWorse(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("objective is non-finite at every start point")]
    NonFinite,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error comes from user input rather than from a computation.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::Csv(_) | Error::InvalidItem(_))
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::ZeroLikelihood { .. } => "zero_likelihood",
            Error::InfiniteDivergence { .. } => "infinite_divergence",
            Error::MenuMismatch { .. } => "menu_mismatch",
            Error::KindMismatch(_) => "kind_mismatch",
            Error::InvalidItem(_) => "invalid_item",
            Error::InvalidMapping(_) => "invalid_mapping",
            Error::DomainMismatch(_) => "domain_mismatch",
            Error::RejectionBudgetExceeded(_) => "rejection_budget_exceeded",
            Error::DegenerateTarget => "degenerate_target",
            Error::NestingViolation(_) => "nesting_violation",
            Error::NaiveNotWorse(_) => "naive_not_worse",
            Error::InsufficientData(_) => "insufficient_data",
            Error::NonFinite => "non_finite",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
