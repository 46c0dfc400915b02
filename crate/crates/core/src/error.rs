use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measure invariant violated: {0}")]
    InvalidMeasure(String),

    #[error("frequency too large for oracle: {panels} panels exceed the budget of {budget}")]
    FrequencyTooLarge { panels: u64, budget: u64 },

    #[error("sequence is not dissociate up to depth {0}")]
    NotDissociate(usize),

    #[error("depth infeasible: N_{index} needs {bits} bits, limit is {limit}")]
    DepthInfeasible { index: usize, bits: u64, limit: u64 },

    #[error("M_{stage} = {value} < 1: sequence violates the rapid-growth assumption")]
    TooFewChildren { stage: usize, value: String },

    #[error("stage {stage} would hold {count} intervals, limit is {limit}")]
    StageTooLarge { stage: usize, count: String, limit: usize },

    #[error("scale {scale} outside the bracket [1/N_{k}, 1/N_{prev})", prev = .k - 1)]
    ScaleOutsideBracket { scale: String, k: usize },

    #[error("no nonzero coefficient found within radius {0}")]
    ShiftSearchFailed(u64),

    #[error("vanishing coefficient at frequency {0}")]
    VanishingCoefficient(String),

    #[error("no admissible candidate frequency")]
    NoAdmissibleCandidate,

    #[error("window hypothesis fails for candidate {0}")]
    WindowViolated(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("truncation search exceeded t = {0}")]
    TruncationSearchFailed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
