//! Weak supervision: labeling functions, vote matrices and their aggregation
//! into silver token labels.

mod aggregate;
mod functions;
mod hmm;
mod votes;

pub use aggregate::{aggregate_simple, AggregationMethod};
pub use functions::{
    apply_labeling_functions, registry, Granularity, LabelingConfig, LabelingFunction, Matching, Measure,
};
pub use hmm::{hmm_fit, hmm_posterior, log_likelihood, posterior_marginals, HmmConfig, HmmFit, HmmParams, CUE, O};
pub use votes::{
    load_silver_labels, load_vote_matrices, write_silver_labels, write_vote_matrices, SilverLabels, Vote,
    VoteMatrix, VoteRecord,
};
