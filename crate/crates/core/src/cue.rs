//! Justification-cue spans: extraction from token probabilities, rubric
//! assignment, the external tagger interchange, and span statistics.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, FORMAT_VERSION};
use crate::similarity::embed_score;
use crate::similarity::EmbeddingTable;
use crate::text::AnnotatedDoc;
use crate::{float9, Error, Result, Scalar};

pub const DEFAULT_SPAN_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct JustificationSpan<F> {
    /// Token range `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub char_start: usize,
    pub char_end: usize,
    #[serde(with = "float9")]
    pub mean_prob: F,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_item_id: Option<usize>,
    #[serde(default, with = "float9::opt", skip_serializing_if = "Option::is_none")]
    pub match_similarity: Option<F>,
}

impl<F: Scalar> JustificationSpan<F> {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Fills the character range from the answer's tokens.
    pub fn locate(mut self, doc: &AnnotatedDoc) -> Self {
        let (s, e) = doc.char_range(self.start, self.end);
        self.char_start = s;
        self.char_end = e;
        self
    }
}

/// Maximal runs of tokens with probability strictly above `threshold`.
/// Character ranges are left at zero; see [`JustificationSpan::locate`].
pub fn extract_spans<F: Scalar>(probs: &[F], threshold: F) -> Vec<JustificationSpan<F>> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < probs.len() {
        if probs[t] <= threshold {
            t += 1;
            continue;
        }
        let start = t;
        while t < probs.len() && probs[t] > threshold {
            t += 1;
        }
        let sum: F = probs[start..t].iter().copied().sum();
        out.push(JustificationSpan {
            start,
            end: t,
            char_start: 0,
            char_end: 0,
            mean_prob: (sum / F::from_count(t - start)).clamp01(),
            matched_item_id: None,
            match_similarity: None,
        });
    }
    out
}

/// Extracts and locates the spans of one answer.
pub fn answer_spans<F: Scalar>(doc: &AnnotatedDoc, probs: &[F], threshold: F) -> Result<Vec<JustificationSpan<F>>> {
    if probs.len() != doc.len() {
        return Err(Error::Alignment(format!(
            "answer {}: {} probabilities for {} tokens",
            doc.id,
            probs.len(),
            doc.len()
        )));
    }
    Ok(extract_spans(probs, threshold).into_iter().map(|s| s.locate(doc)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment<F> {
    pub item_id: usize,
    pub similarity: F,
    /// No item scored above zero.
    pub degenerate: bool,
}

/// Best-matching rubric item for tokens `[start, end)` of `answer` by
/// embedding F1; ties go to the lowest item id. `items[i]` is item `i`.
pub fn assign_span_to_rubric<F: Scalar>(
    answer: &AnnotatedDoc,
    start: usize,
    end: usize,
    items: &[AnnotatedDoc],
    table: &EmbeddingTable<F>,
) -> Result<Assignment<F>> {
    if items.is_empty() {
        return Err(Error::Validation(format!("answer {}: rubric has no items", answer.id)));
    }
    let span = table.content_vectors(answer, start, end);
    let sims = items.iter().map(|item| embed_score(&span, &table.content_vectors(item, 0, item.len())).f1);
    Ok(best_item(sims))
}

/// Argmax with lowest-index tie-break.
pub fn best_item<F: Scalar>(sims: impl IntoIterator<Item = F>) -> Assignment<F> {
    let mut best = Assignment {
        item_id: 0,
        similarity: F::zero(),
        degenerate: true,
    };
    for (i, s) in sims.into_iter().enumerate() {
        if s > best.similarity {
            best = Assignment {
                item_id: i,
                similarity: s,
                degenerate: false,
            };
        }
    }
    best
}

/// Assigns every span of an answer in place.
pub fn assign_spans<F: Scalar>(
    answer: &AnnotatedDoc,
    spans: &mut [JustificationSpan<F>],
    items: &[AnnotatedDoc],
    table: &EmbeddingTable<F>,
) -> Result<Vec<Assignment<F>>> {
    spans
        .iter_mut()
        .map(|s| {
            let a = assign_span_to_rubric(answer, s.start, s.end, items, table)?;
            s.matched_item_id = Some(a.item_id);
            s.match_similarity = Some(a.similarity);
            Ok(a)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    HmmBaseline,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerOutput<F> {
    pub answer_id: String,
    pub token_probs: Vec<F>,
    pub provenance: Provenance,
}

/// One character span of the tagger interchange file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerSpan {
    pub char_start: usize,
    pub char_end: usize,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerRecord {
    pub answer_id: String,
    pub spans: Vec<TaggerSpan>,
    pub model_id: String,
    pub format_version: String,
}

impl TaggerRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        for s in &self.spans {
            if s.char_start >= s.char_end {
                return Err(format!("empty span [{}, {})", s.char_start, s.char_end));
            }
            if !(0.0..=1.0).contains(&s.prob) {
                return Err(format!("span prob {} outside [0,1]", s.prob));
            }
        }
        let mut sorted: Vec<&TaggerSpan> = self.spans.iter().collect();
        sorted.sort_by_key(|s| (s.char_start, s.char_end));
        if let Some(w) = sorted.windows(2).find(|w| w[1].char_start < w[0].char_end) {
            return Err(format!(
                "overlapping spans [{}, {}) and [{}, {})",
                w[0].char_start, w[0].char_end, w[1].char_start, w[1].char_end
            ));
        }
        Ok(())
    }
}

/// Token probabilities from character spans: each token takes the
/// overlap-weighted mean of the span probabilities, uncovered characters
/// counting as 0.
pub fn remap_to_tokens<F: Scalar>(doc: &AnnotatedDoc, spans: &[TaggerSpan]) -> Vec<F> {
    doc.tokens
        .iter()
        .map(|t| {
            let width = (t.char_end - t.char_start) as f64;
            let p: f64 = spans
                .iter()
                .filter(|s| s.char_start < t.char_end && t.char_start < s.char_end)
                .map(|s| {
                    let overlap = s.char_end.min(t.char_end) - s.char_start.max(t.char_start);
                    overlap as f64 / width * s.prob
                })
                .sum();
            F::lit(p).clamp01()
        })
        .collect()
}

/// Loads a tagger interchange file and aligns it to `docs` (keyed by answer id).
pub fn load_external_probs<F: Scalar>(
    path: &Path,
    docs: &BTreeMap<String, AnnotatedDoc>,
) -> Result<Vec<TaggerOutput<F>>> {
    let mut seen = HashSet::new();
    jsonl::read_records::<TaggerRecord>(path)?
        .into_iter()
        .map(|(line, rec)| {
            jsonl::check_version(path, &rec.format_version)?;
            rec.validate().map_err(|message| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("answer {}: {message}", rec.answer_id),
            })?;
            let doc = docs.get(&rec.answer_id).ok_or_else(|| {
                Error::Validation(format!("unknown answer_id {:?} in {}", rec.answer_id, path.display()))
            })?;
            if !seen.insert(rec.answer_id.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate answer_id {:?} in {}",
                    rec.answer_id,
                    path.display()
                )));
            }
            Ok(TaggerOutput {
                token_probs: remap_to_tokens(doc, &rec.spans),
                answer_id: rec.answer_id,
                provenance: Provenance::External,
            })
        })
        .collect()
}

pub fn write_tagger_records(records: &[TaggerRecord], path: &Path) -> Result<()> {
    jsonl::write_atomic(path, jsonl::to_lines(records)?.as_bytes())
}

/// Builds an interchange record whose spans tile `doc`'s tokens one per token.
pub fn tagger_record_from_tokens<F: Scalar>(doc: &AnnotatedDoc, probs: &[F], model_id: &str) -> TaggerRecord {
    TaggerRecord {
        answer_id: doc.id.clone(),
        spans: doc
            .tokens
            .iter()
            .zip(probs)
            .map(|(t, p)| TaggerSpan {
                char_start: t.char_start,
                char_end: t.char_end,
                prob: p.as_f64(),
            })
            .collect(),
        model_id: model_id.to_string(),
        format_version: FORMAT_VERSION.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TaskMetrics<F> {
    pub num_cues: usize,
    #[serde(with = "float9")]
    pub avg_tokens_per_cue: F,
    #[serde(with = "float9")]
    pub pct_cue_tokens: F,
}

pub fn task_metrics<F: Scalar>(spans: &[JustificationSpan<F>], num_tokens: usize) -> Result<TaskMetrics<F>> {
    if num_tokens == 0 {
        return Err(Error::Empty("task metrics need at least one token"));
    }
    let total: usize = spans.iter().map(JustificationSpan::len).sum();
    Ok(TaskMetrics {
        num_cues: spans.len(),
        avg_tokens_per_cue: if spans.is_empty() {
            F::zero()
        } else {
            F::from_count(total) / F::from_count(spans.len())
        },
        pct_cue_tokens: F::from_count(total) / F::from_count(num_tokens),
    })
}

fn normalize_span_text(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Number of spans whose normalized text repeats an earlier span's.
pub fn duplicate_spans<S: AsRef<str>>(texts: &[S]) -> usize {
    let mut seen = HashSet::new();
    texts
        .iter()
        .filter(|t| !seen.insert(normalize_span_text(t.as_ref())))
        .count()
}
