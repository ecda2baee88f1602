use serde::{Deserialize, Serialize};

use crate::corpus::{AwardedPoints, Rubric};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummationParams {
    pub threshold: f64,
}

impl Default for SummationParams {
    fn default() -> Self {
        SummationParams { threshold: 0.5 }
    }
}

impl SummationParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Validation(format!(
                "summation threshold {} outside [0,1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Points of every item whose value is strictly above the threshold.
pub fn awarded_points<F: Scalar>(values: &[F], rubric: &Rubric, params: &SummationParams) -> Result<Vec<AwardedPoints<F>>> {
    params.validate()?;
    if values.len() != rubric.len() {
        return Err(Error::Dimension {
            expected: rubric.len(),
            found: values.len(),
        });
    }
    let threshold = F::lit(params.threshold);
    Ok(rubric
        .items
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(_, (_, &v))| v > threshold)
        .map(|(i, (item, _))| AwardedPoints {
            item_id: i,
            points: F::lit(item.points),
        })
        .collect())
}

/// `min(1, Σ awarded points / max_points)`.
pub fn summation_grade<F: Scalar>(values: &[F], rubric: &Rubric, params: &SummationParams) -> Result<F> {
    if !(rubric.max_points > 0.0) {
        return Err(Error::Validation(format!(
            "rubric {}: max_points must be positive, got {}",
            rubric.question_id, rubric.max_points
        )));
    }
    let raw: F = awarded_points(values, rubric, params)?.iter().map(|a| a.points).sum();
    Ok((raw / F::lit(rubric.max_points)).clamp01())
}
