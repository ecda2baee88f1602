use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cue::JustificationSpan;
use crate::jsonl::{self, FORMAT_VERSION};
use crate::similarity::{embed_score, EmbeddingTable};
use crate::text::AnnotatedDoc;
use crate::{float9, Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Hard,
    #[default]
    Fuzzy,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Strategy::Hard),
            "fuzzy" => Ok(Strategy::Fuzzy),
            other => Err(Error::Validation(format!("unknown matching strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ScoringVector<F> {
    pub answer_id: String,
    pub question_id: String,
    pub strategy: Strategy,
    /// One entry per rubric item, in rubric order.
    #[serde(with = "float9::vec")]
    pub values: Vec<F>,
}

impl<F: Scalar> ScoringVector<F> {
    pub fn zeros(answer_id: &str, question_id: &str, strategy: Strategy, len: usize) -> Self {
        ScoringVector {
            answer_id: answer_id.to_string(),
            question_id: question_id.to_string(),
            strategy,
            values: vec![F::zero(); len],
        }
    }

    pub fn validate(&self, rubric_len: usize) -> Result<()> {
        if self.values.len() != rubric_len {
            return Err(Error::Dimension {
                expected: rubric_len,
                found: self.values.len(),
            });
        }
        if let Some(v) = self.values.iter().find(|v| !(**v >= F::zero() && **v <= F::one())) {
            return Err(Error::Validation(format!(
                "scoring vector {}: value {v} outside [0,1]",
                self.answer_id
            )));
        }
        Ok(())
    }
}

/// `values[i]` is the best embedding F1 of any span against item `i`.
pub fn scoring_vector_fuzzy<F: Scalar>(
    answer: &AnnotatedDoc,
    question_id: &str,
    spans: &[JustificationSpan<F>],
    items: &[AnnotatedDoc],
    table: &EmbeddingTable<F>,
) -> ScoringVector<F> {
    let mut v = ScoringVector::zeros(&answer.id, question_id, Strategy::Fuzzy, items.len());
    let item_vecs: Vec<_> = items.iter().map(|d| table.content_vectors(d, 0, d.len())).collect();
    for s in spans {
        let span = table.content_vectors(answer, s.start, s.end);
        for (slot, item) in v.values.iter_mut().zip(&item_vecs) {
            let f1 = embed_score(&span, item).f1;
            if f1 > *slot {
                *slot = f1;
            }
        }
    }
    v
}

/// `values[i]` is the best similarity among spans assigned to item `i`.
/// Unassigned spans are ignored.
pub fn scoring_vector_hard<F: Scalar>(
    answer_id: &str,
    question_id: &str,
    spans: &[JustificationSpan<F>],
    rubric_len: usize,
) -> Result<ScoringVector<F>> {
    let mut v: ScoringVector<F> = ScoringVector::zeros(answer_id, question_id, Strategy::Hard, rubric_len);
    for s in spans {
        let (Some(i), Some(sim)) = (s.matched_item_id, s.match_similarity) else {
            continue;
        };
        let slot = v.values.get_mut(i).ok_or_else(|| {
            Error::Validation(format!("answer {answer_id}: span matched item {i} of a {rubric_len}-item rubric"))
        })?;
        *slot = slot.max(sim.clamp01());
    }
    Ok(v)
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct VersionedVector<F> {
    format_version: String,
    #[serde(flatten)]
    inner: ScoringVector<F>,
}

pub fn write_scoring_vectors<F: Scalar>(vectors: &[ScoringVector<F>], path: &Path) -> Result<()> {
    let lines = jsonl::to_lines(vectors.iter().map(|v| VersionedVector {
        format_version: FORMAT_VERSION.to_string(),
        inner: v.clone(),
    }))?;
    jsonl::write_atomic(path, lines.as_bytes())
}

pub fn load_scoring_vectors<F: Scalar>(path: &Path) -> Result<Vec<ScoringVector<F>>> {
    jsonl::read_records::<VersionedVector<F>>(path)?
        .into_iter()
        .map(|(_, r)| {
            jsonl::check_version(path, &r.format_version)?;
            Ok(r.inner)
        })
        .collect()
}
