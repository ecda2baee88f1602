//! Explainable short-answer grading.
//!
//! Student answers are tokenized and segmented into cue candidates,
//! labeling functions vote on which tokens evidence a rubric item, and an
//! HMM turns the votes into per-token cue probabilities. Cue spans are
//! matched against the rubric to form a scoring vector, which a symbolic
//! head (threshold summation or a per-question regression tree) turns into
//! a grade with a cue-level explanation.
//!
//! The numeric code is generic over [`Scalar`]; the aliases below fix it
//! to `f64`, which is what the pipeline and the file formats use.

pub mod corpus;
pub mod cue;
pub mod eval;
mod error;
pub mod float9;
pub mod grading;
pub mod jsonl;
pub mod pipeline;
mod scalar;
pub mod similarity;
pub mod text;
pub mod weak;

pub use error::{Error, Result};
pub use scalar::{log_sum_exp, Scalar};

pub type VoteMatrix = weak::VoteMatrix<f64>;
pub type SilverLabels = weak::SilverLabels<f64>;
pub type HmmParams = weak::HmmParams<f64>;
pub type JustificationSpan = cue::JustificationSpan<f64>;
pub type ScoringVector = grading::ScoringVector<f64>;
pub type DecisionTreeModel = grading::DecisionTreeModel<f64>;
pub type GradeExplanation = corpus::GradeExplanation<f64>;
pub type EmbeddingTable = similarity::EmbeddingTable<f64>;
