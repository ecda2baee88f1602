use crate::corpus::{AwardedPoints, ExplainedSpan, GradeExplanation, HeadKind, PathStep};
use crate::cue::JustificationSpan;
use crate::text::AnnotatedDoc;
use crate::Scalar;

use super::vector::ScoringVector;

/// What a grading head decided for one answer.
#[derive(Debug, Clone, PartialEq)]
pub enum HeadResult<F> {
    Summation { score: F, awarded: Vec<AwardedPoints<F>> },
    Tree { score: F, path: Vec<PathStep<F>> },
}

impl<F: Scalar> HeadResult<F> {
    pub fn score(&self) -> F {
        match self {
            HeadResult::Summation { score, .. } | HeadResult::Tree { score, .. } => *score,
        }
    }
}

pub fn explain<F: Scalar>(
    answer: &AnnotatedDoc,
    spans: &[JustificationSpan<F>],
    vector: &ScoringVector<F>,
    head: HeadResult<F>,
) -> GradeExplanation<F> {
    let spans = spans
        .iter()
        .map(|s| ExplainedSpan {
            char_start: s.char_start,
            char_end: s.char_end,
            matched_item_id: s.matched_item_id,
            similarity: s.match_similarity.unwrap_or_else(F::zero),
            text: answer.span_text(s.start, s.end),
        })
        .collect();
    let final_score = head.score().clamp01();
    let (head_kind, awarded, path) = match head {
        HeadResult::Summation { awarded, .. } => (HeadKind::Summation, awarded, Vec::new()),
        HeadResult::Tree { path, .. } => (HeadKind::DecisionTree, Vec::new(), path),
    };
    GradeExplanation {
        answer_id: answer.id.clone(),
        question_id: vector.question_id.clone(),
        head_kind,
        answer_text: answer.text.clone(),
        spans,
        scoring_vector: vector.values.clone(),
        awarded,
        path,
        final_score,
    }
}
