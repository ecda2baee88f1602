//! Answer corpora, scoring rubrics and grade explanations on disk.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::jsonl::{self, FORMAT_VERSION};
use crate::{float9, Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    De,
    En,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::De => "de",
            Language::En => "en",
        })
    }
}

impl std::str::FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "de" => Ok(Language::De),
            "en" => Ok(Language::En),
            other => Err(Error::Validation(format!("unknown language {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Validation(format!("unknown split {other:?}"))),
        }
    }
}

/// One scored student answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub answer_id: String,
    pub question_id: String,
    pub language: Language,
    #[serde(rename = "question")]
    pub question_text: String,
    pub reference_answer: String,
    pub student_answer: String,
    /// Normalized to `[0, 1]`.
    #[serde(with = "float9")]
    pub score: f64,
    pub split: Split,
}

impl AnswerRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Validation(format!(
                "answer {}: score out of range: {}",
                self.answer_id, self.score
            )));
        }
        if self.student_answer.trim().is_empty() {
            return Err(Error::Validation(format!(
                "answer {}: empty student_answer",
                self.answer_id
            )));
        }
        if self.answer_id.is_empty() {
            return Err(Error::Validation("empty answer_id".into()));
        }
        Ok(())
    }
}

/// Converts a raw point score to the normalized `[0, 1]` convention.
pub fn normalize_score(raw: f64, max_points: f64) -> Result<f64> {
    if max_points <= 0.0 {
        return Err(Error::Validation(format!(
            "max_points must be positive, got {max_points}"
        )));
    }
    Ok((raw / max_points).clamp(0.0, 1.0))
}

pub fn load_corpus(path: &Path) -> Result<Vec<AnswerRecord>> {
    let records = jsonl::read_records::<AnswerRecord>(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, rec) in records {
        rec.validate()
            .map_err(|e| Error::Validation(format!("{}:{line}: {e}", path.display())))?;
        if !seen.insert(rec.answer_id.clone()) {
            return Err(Error::Validation(format!(
                "{}:{line}: duplicate answer_id {:?}",
                path.display(),
                rec.answer_id
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_corpus(records: &[AnswerRecord], path: &Path) -> Result<()> {
    jsonl::write_atomic(path, jsonl::to_lines(records)?.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RubricItem {
    pub item_id: usize,
    pub key_element: String,
    pub points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rubric {
    pub question_id: String,
    /// Overrides the language inferred from the question's answers.
    pub language: Option<Language>,
    pub items: Vec<RubricItem>,
    pub max_points: f64,
}

impl Rubric {
    /// Rubric length, i.e. the number of key elements.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn points<F: Scalar>(&self) -> Vec<F> {
        self.items.iter().map(|i| F::lit(i.points)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let q = &self.question_id;
        if self.items.is_empty() {
            return Err(Error::Validation(format!("rubric {q}: no items")));
        }
        let mut max_item = 0.0f64;
        for item in &self.items {
            if !(item.points > 0.0) {
                return Err(Error::Validation(format!(
                    "rubric {q} item {}: points must be > 0, got {}",
                    item.item_id, item.points
                )));
            }
            if item.key_element.trim().is_empty() {
                return Err(Error::Validation(format!(
                    "rubric {q} item {}: empty key_element",
                    item.item_id
                )));
            }
            max_item = max_item.max(item.points);
        }
        if self.max_points < max_item {
            return Err(Error::Validation(format!(
                "rubric {q}: max_points {} below largest item ({max_item})",
                self.max_points
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize, Serialize)]
struct RawItem {
    key_element: String,
    points: f64,
}

#[derive(Deserialize, Serialize)]
struct RawRubric {
    max_points: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    language: Option<Language>,
    items: Vec<RawItem>,
}

/// Keeps every entry of a JSON object in order, duplicates included.
struct Entries(Vec<(String, RawRubric)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object keyed by question_id")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, RawRubric>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

/// Parses a rubric document: `{question_id: {max_points, items: [{key_element, points}]}}`.
pub fn parse_rubrics(text: &str, origin: &Path) -> Result<BTreeMap<String, Rubric>> {
    let Entries(entries) = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for (question_id, raw) in entries {
        let rubric = Rubric {
            question_id: question_id.clone(),
            language: raw.language,
            items: raw
                .items
                .into_iter()
                .enumerate()
                .map(|(item_id, i)| RubricItem {
                    item_id,
                    key_element: i.key_element,
                    points: i.points,
                })
                .collect(),
            max_points: raw.max_points,
        };
        rubric.validate()?;
        if out.insert(question_id.clone(), rubric).is_some() {
            return Err(Error::Validation(format!(
                "duplicate question_id {question_id:?} in rubric file"
            )));
        }
    }
    Ok(out)
}

pub fn load_rubrics(path: &Path) -> Result<BTreeMap<String, Rubric>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rubrics(&text, path)
}

pub fn write_rubrics(rubrics: &BTreeMap<String, Rubric>, path: &Path) -> Result<()> {
    let raw: BTreeMap<&str, RawRubric> = rubrics
        .iter()
        .map(|(q, r)| {
            (
                q.as_str(),
                RawRubric {
                    max_points: r.max_points,
                    language: r.language,
                    items: r
                        .items
                        .iter()
                        .map(|i| RawItem {
                            key_element: i.key_element.clone(),
                            points: i.points,
                        })
                        .collect(),
                },
            )
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&raw)
        .map_err(|e| Error::Validation(format!("cannot serialize rubrics: {e}")))?;
    text.push('\n');
    jsonl::write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Summation,
    DecisionTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

/// One cue span as reported to a reader of the grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ExplainedSpan<F> {
    pub char_start: usize,
    pub char_end: usize,
    pub matched_item_id: Option<usize>,
    #[serde(with = "float9")]
    pub similarity: F,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct AwardedPoints<F> {
    pub item_id: usize,
    #[serde(with = "float9")]
    pub points: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct PathStep<F> {
    pub feature_index: usize,
    #[serde(with = "float9")]
    pub threshold: F,
    pub direction: Direction,
}

/// Final grade plus the cue and rubric evidence that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GradeExplanation<F> {
    pub answer_id: String,
    pub question_id: String,
    pub head_kind: HeadKind,
    pub answer_text: String,
    pub spans: Vec<ExplainedSpan<F>>,
    #[serde(with = "float9::vec")]
    pub scoring_vector: Vec<F>,
    pub awarded: Vec<AwardedPoints<F>>,
    /// Root-to-leaf route; empty for the summation head.
    #[serde(default)]
    pub path: Vec<PathStep<F>>,
    #[serde(with = "float9")]
    pub final_score: F,
}

impl<F: Scalar> GradeExplanation<F> {
    pub fn validate(&self, rubric_len: usize) -> Result<()> {
        if !(self.final_score >= F::zero() && self.final_score <= F::one()) {
            return Err(Error::Validation(format!(
                "explanation {}: final_score {} outside [0,1]",
                self.answer_id, self.final_score
            )));
        }
        if self.scoring_vector.len() != rubric_len {
            return Err(Error::Dimension {
                expected: rubric_len,
                found: self.scoring_vector.len(),
            });
        }
        if let Some(bad) = self
            .spans
            .iter()
            .filter_map(|s| s.matched_item_id)
            .find(|&id| id >= rubric_len)
        {
            return Err(Error::Validation(format!(
                "explanation {}: matched item {bad} outside rubric of {rubric_len} items",
                self.answer_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplanationFormat {
    Machine,
    Human,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct VersionedExplanation<F> {
    format_version: String,
    #[serde(flatten)]
    inner: GradeExplanation<F>,
}

/// Writes explanations either as line-delimited records or as a markdown
/// report. `rubrics` supplies key-element text for the markdown tables.
pub fn write_explanations<F: Scalar>(
    explanations: &[GradeExplanation<F>],
    path: &Path,
    format: ExplanationFormat,
    rubrics: Option<&BTreeMap<String, Rubric>>,
) -> Result<()> {
    let body = match format {
        ExplanationFormat::Machine => jsonl::to_lines(explanations.iter().map(|e| {
            VersionedExplanation {
                format_version: FORMAT_VERSION.to_string(),
                inner: e.clone(),
            }
        }))?,
        ExplanationFormat::Human => explanations
            .iter()
            .map(|e| render_markdown(e, rubrics.and_then(|r| r.get(&e.question_id))))
            .collect::<Vec<_>>()
            .join("\n"),
    };
    jsonl::write_atomic(path, body.as_bytes())
}

pub fn load_explanations<F: Scalar>(path: &Path) -> Result<Vec<GradeExplanation<F>>> {
    jsonl::read_records::<VersionedExplanation<F>>(path)?
        .into_iter()
        .map(|(_, r)| {
            jsonl::check_version(path, &r.format_version)?;
            Ok(r.inner)
        })
        .collect()
}

pub const HIGHLIGHT_OPEN: &str = "==";
pub const HIGHLIGHT_CLOSE: &str = "==";

/// Wraps each span of `text` (character offsets) in highlight markers.
pub fn highlight(text: &str, spans: &[(usize, usize)]) -> String {
    let mut sorted = spans.to_vec();
    sorted.sort_unstable();
    let mut out = String::with_capacity(text.len() + 4 * spans.len());
    let mut next = sorted.iter().peekable();
    let mut open_until: Option<usize> = None;
    for (i, ch) in text.chars().enumerate() {
        if open_until == Some(i) {
            out.push_str(HIGHLIGHT_CLOSE);
            open_until = None;
        }
        if open_until.is_none() {
            while next.peek().is_some_and(|s| s.0 < i) {
                next.next();
            }
            if let Some(&&(s, e)) = next.peek() {
                if s == i && e > s {
                    out.push_str(HIGHLIGHT_OPEN);
                    open_until = Some(e);
                    next.next();
                }
            }
        }
        out.push(ch);
    }
    if open_until.is_some() {
        out.push_str(HIGHLIGHT_CLOSE);
    }
    out
}

pub fn render_markdown<F: Scalar>(e: &GradeExplanation<F>, rubric: Option<&Rubric>) -> String {
    let ranges: Vec<(usize, usize)> = e.spans.iter().map(|s| (s.char_start, s.char_end)).collect();
    let head = match e.head_kind {
        HeadKind::Summation => "summation",
        HeadKind::DecisionTree => "decision tree",
    };
    let mut md = format!(
        "## Answer {} (question {})\n\nFinal score: **{:.3}** ({head})\n\n> {}\n\n",
        e.answer_id,
        e.question_id,
        e.final_score.as_f64(),
        highlight(&e.answer_text, &ranges).replace('\n', "\n> ")
    );
    if !e.spans.is_empty() {
        md.push_str("Justification cues:\n\n");
        for s in &e.spans {
            let item = s
                .matched_item_id
                .map_or_else(|| "-".to_string(), |i| i.to_string());
            md.push_str(&format!(
                "- {HIGHLIGHT_OPEN}{}{HIGHLIGHT_CLOSE} → item {item} (similarity {:.3})\n",
                s.text,
                s.similarity.as_f64()
            ));
        }
        md.push('\n');
    }
    md.push_str("| Item | Key element | Similarity | Points awarded |\n|---:|---|---:|---:|\n");
    for (i, v) in e.scoring_vector.iter().enumerate() {
        let key = rubric
            .and_then(|r| r.items.get(i))
            .map_or("", |it| it.key_element.as_str());
        let pts = e
            .awarded
            .iter()
            .find(|a| a.item_id == i)
            .map_or(0.0, |a| a.points.as_f64());
        md.push_str(&format!("| {i} | {key} | {:.3} | {pts} |\n", v.as_f64()));
    }
    if !e.path.is_empty() {
        md.push_str("\nDecision path:\n\n");
        for step in &e.path {
            let (op, dir) = match step.direction {
                Direction::Left => ("≤", "left"),
                Direction::Right => (">", "right"),
            };
            md.push_str(&format!(
                "- item {} {op} {:.3} ({dir})\n",
                step.feature_index,
                step.threshold.as_f64()
            ));
        }
    }
    md
}
