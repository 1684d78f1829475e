//! Budgeted key-shot selection for video summarization, and supervised
//! learning of the property weights that drive it.
//!
//! A summary is scored by a non-negative weighting of four normalized
//! properties (importance, representativeness, diversity, storyness) and
//! selected greedily under a shot-count or duration budget. Separate weights
//! for edited and raw videos are learned from a mixed training set by
//! max-margin subgradient descent, with every video weighted by how closely
//! its summarization pattern matches each class.

pub mod error;
pub mod greedy;
pub mod learning;
pub mod metrics;
pub mod objective;
pub mod pattern;
pub mod properties;
pub mod video;

pub use error::{Error, Result};
pub use greedy::{
    exact_search, exact_select, greedy_ratio_report, greedy_select, lazy_greedy, naive_greedy,
    Budget, ExactMode, GreedyState, RatioReport, Selection, SetFunction, EXACT_MAX_SHOTS,
};
pub use learning::{
    aggregate_weights, psd_fit, regularized_hinge, train, ExactInner, TrainConfig, TrainReport,
    TrainingExample, REPORT_SCHEMA_VERSION,
};
pub use metrics::{
    activity_recall, f_measure_frames, f_measure_shot, Activity, ActivityAnnotation,
    FrameSummary, PrecisionRecall,
};
pub use objective::{hinge_loss, task_loss, Objective, PropertyWeight, WeightClass};
pub use pattern::{
    fit_pattern, mixing_coefficients, mixing_coefficients_excluding_zero, pattern_similarity,
    MixingPair, SummarizationPattern, VideoClass,
};
pub use properties::{
    f_div, f_imp, f_rep, f_rep_with, f_sto, property_vector, PropertyEvaluator,
    Representativeness,
};
pub use video::{FeatureMatrix, FrameRange, Normalizers, PropertyVector, SummarySet};
