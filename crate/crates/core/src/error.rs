use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate video: {0}")]
    DegenerateVideo(String),

    #[error("summary is empty")]
    EmptySummary,

    #[error("ground-truth summary is empty")]
    EmptyGroundTruth,

    #[error("budget {budget} exceeds the {shots} available shots")]
    BudgetTooLarge { budget: usize, shots: usize },

    #[error("instance with {shots} shots exceeds the exhaustive-search cap of {cap}")]
    InstanceTooLarge { shots: usize, cap: usize },

    #[error("label vector has no key shots")]
    NoKeyShots,

    #[error("summarization pattern of video {index} is the zero vector")]
    ZeroPattern { index: usize },

    #[error("need at least {needed} {class} videos, found {found}")]
    InsufficientClassMembers {
        class: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("non-finite property weight after iteration {iteration}")]
    NaNGuard { iteration: usize },

    #[error("shot frame ranges are required for this metric")]
    MissingFrameMap,

    #[error("{0} set is empty")]
    EmptySet(&'static str),

    #[error("all {0} training videos failed")]
    AllVideosFailed(usize),
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DegenerateVideo(_) => "degenerate-video",
            Error::EmptySummary => "empty-summary",
            Error::EmptyGroundTruth => "empty-ground-truth",
            Error::BudgetTooLarge { .. } => "budget-too-large",
            Error::InstanceTooLarge { .. } => "instance-too-large",
            Error::NoKeyShots => "no-key-shots",
            Error::ZeroPattern { .. } => "zero-pattern",
            Error::InsufficientClassMembers { .. } => "insufficient-class-members",
            Error::DegenerateWeights(_) => "degenerate-weights",
            Error::NaNGuard { .. } => "nan-guard",
            Error::MissingFrameMap => "missing-frame-map",
            Error::EmptySet(_) => "empty-set",
            Error::AllVideosFailed(_) => "all-videos-failed",
        }
    }
}
