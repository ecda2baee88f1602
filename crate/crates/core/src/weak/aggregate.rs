use serde::{Deserialize, Serialize};

use super::votes::{SilverLabels, VoteMatrix};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    /// Mean over all functions, abstain counted as 0.
    AverageAll,
    /// Mean over soft functions only, abstain counted as 0.
    AverageSoftOnly,
    Max,
    /// Mean of the votes that are neither abstain nor 0.
    AverageNonZero,
    /// `min(1, Σ votes)`.
    SumCapped,
}

fn token_value<F: Scalar>(matrix: &VoteMatrix<F>, t: usize, method: AggregationMethod) -> F {
    let votes = matrix.column(t);
    match method {
        AggregationMethod::AverageAll => {
            let j = matrix.num_functions();
            if j == 0 {
                return F::zero();
            }
            votes.flatten().sum::<F>() / F::from_count(j)
        }
        AggregationMethod::AverageSoftOnly => {
            let n = matrix.soft.iter().filter(|s| **s).count();
            if n == 0 {
                return F::zero();
            }
            votes
                .zip(&matrix.soft)
                .filter(|(_, s)| **s)
                .filter_map(|(v, _)| v)
                .sum::<F>()
                / F::from_count(n)
        }
        AggregationMethod::Max => votes.flatten().fold(F::zero(), F::max),
        AggregationMethod::AverageNonZero => {
            let nz: Vec<F> = votes.flatten().filter(|v| *v != F::zero()).collect();
            if nz.is_empty() {
                F::zero()
            } else {
                nz.iter().copied().sum::<F>() / F::from_count(nz.len())
            }
        }
        AggregationMethod::SumCapped => votes.flatten().sum::<F>().min(F::one()),
    }
}

pub fn aggregate_simple<F: Scalar>(matrix: &VoteMatrix<F>, method: AggregationMethod) -> SilverLabels<F> {
    SilverLabels {
        answer_id: matrix.answer_id.clone(),
        probs: (0..matrix.num_tokens())
            .map(|t| token_value(matrix, t, method).clamp01())
            .collect(),
    }
}
