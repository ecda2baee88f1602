use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stages::{split_name, SpanRecord};
use crate::corpus::{AnswerRecord, GradeExplanation, Rubric, Split};
use crate::eval::{
    class_grouped_task_metrics, nine_class_report, pearson, rmse, token_macro_prf, Correlation, GradeClass,
    GroupMeans, NineClassReport, Prf,
};
use crate::jsonl::FORMAT_VERSION;
use crate::weak::SilverLabels;
use crate::{float9, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionReport {
    pub answers: usize,
    pub rubric_length: usize,
    #[serde(with = "float9")]
    pub rmse: f64,
    pub nine_class: NineClassReport<f64>,
}

/// A correlation, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub correlation: Option<Correlation<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl From<Result<Correlation<f64>>> for CorrelationEntry {
    fn from(r: Result<Correlation<f64>>) -> Self {
        match r {
            Ok(c) => CorrelationEntry {
                correlation: Some(c),
                note: None,
            },
            Err(e) => CorrelationEntry {
                correlation: None,
                note: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub answers: usize,
    #[serde(with = "float9")]
    pub rmse: f64,
    pub nine_class: NineClassReport<f64>,
    pub questions: BTreeMap<String, QuestionReport>,
    /// Rubric length against each per-question metric, across questions.
    pub rubric_length_correlation: BTreeMap<String, CorrelationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: String,
    pub splits: BTreeMap<Split, SplitReport>,
    /// Span-stage token probabilities against the silver labels.
    pub token_prf: Option<Prf<f64>>,
    /// Task metrics grouped by gold grade class, over all graded answers.
    pub task_metrics_by_class: BTreeMap<GradeClass, GroupMeans<f64>>,
}

type PredGold = (Vec<f64>, Vec<f64>);
type Metric = fn(&QuestionReport) -> f64;

pub(crate) fn build_report(
    explanations: &[GradeExplanation<f64>],
    corpus: &[AnswerRecord],
    rubrics: &BTreeMap<String, Rubric>,
    spans: &[SpanRecord],
    silver: Option<&[SilverLabels<f64>]>,
    threshold: f64,
) -> Result<EvalReport> {
    if explanations.is_empty() {
        return Err(Error::Empty("explanations"));
    }
    let gold: HashMap<&str, &AnswerRecord> = corpus.iter().map(|a| (a.answer_id.as_str(), a)).collect();
    let mut grouped: BTreeMap<Split, BTreeMap<&str, PredGold>> = BTreeMap::new();
    for e in explanations {
        let rec = gold
            .get(e.answer_id.as_str())
            .ok_or_else(|| Error::Validation(format!("graded answer {} is not in the corpus", e.answer_id)))?;
        let (pred, g) = grouped.entry(rec.split).or_default().entry(&e.question_id).or_default();
        pred.push(e.final_score);
        g.push(rec.score);
    }

    let mut splits = BTreeMap::new();
    for (split, per_q) in grouped {
        let mut questions = BTreeMap::new();
        let (mut all_pred, mut all_gold) = (Vec::new(), Vec::new());
        for (qid, (pred, g)) in per_q {
            let rubric_length = rubrics.get(qid).map_or(0, Rubric::len);
            questions.insert(
                qid.to_string(),
                QuestionReport {
                    answers: pred.len(),
                    rubric_length,
                    rmse: rmse(&pred, &g)?,
                    nine_class: nine_class_report(&pred, &g)?,
                },
            );
            all_pred.extend(pred);
            all_gold.extend(g);
        }
        let lengths: Vec<f64> = questions.values().map(|q| q.rubric_length as f64).collect();
        let metrics: [(&str, Metric); 4] = [
            ("rmse", |q| q.rmse),
            ("accuracy", |q| q.nine_class.accuracy),
            ("macro_f1", |q| q.nine_class.macro_f1),
            ("weighted_f1", |q| q.nine_class.weighted_f1),
        ];
        let rubric_length_correlation = metrics
            .iter()
            .map(|(name, get)| {
                let ys: Vec<f64> = questions.values().map(get).collect();
                (name.to_string(), pearson(&lengths, &ys).into())
            })
            .collect();
        splits.insert(
            split,
            SplitReport {
                answers: all_pred.len(),
                rmse: rmse(&all_pred, &all_gold)?,
                nine_class: nine_class_report(&all_pred, &all_gold)?,
                questions,
                rubric_length_correlation,
            },
        );
    }

    let token_prf = match silver {
        Some(labels) => {
            let by_id: HashMap<&str, &SilverLabels<f64>> = labels.iter().map(|l| (l.answer_id.as_str(), l)).collect();
            let (mut p, mut s) = (Vec::new(), Vec::new());
            for r in spans {
                if let Some(l) = by_id.get(r.answer_id.as_str()) {
                    if l.probs.len() != r.token_probs.len() {
                        return Err(Error::Alignment(format!(
                            "answer {}: {} silver labels for {} tokens",
                            r.answer_id,
                            l.probs.len(),
                            r.token_probs.len()
                        )));
                    }
                    p.extend_from_slice(&r.token_probs);
                    s.extend_from_slice(&l.probs);
                }
            }
            if p.is_empty() {
                None
            } else {
                Some(token_macro_prf(&p, &s, threshold)?)
            }
        }
        None => None,
    };

    let graded: HashMap<&str, ()> = explanations.iter().map(|e| (e.answer_id.as_str(), ())).collect();
    let (mut metrics, mut scores) = (Vec::new(), Vec::new());
    for r in spans.iter().filter(|r| graded.contains_key(r.answer_id.as_str())) {
        if let Some(rec) = gold.get(r.answer_id.as_str()) {
            metrics.push(r.metrics);
            scores.push(rec.score);
        }
    }
    Ok(EvalReport {
        format_version: FORMAT_VERSION.to_string(),
        splits,
        token_prf,
        task_metrics_by_class: class_grouped_task_metrics(&metrics, &scores)?,
    })
}

fn class_name(c: GradeClass) -> &'static str {
    match c {
        GradeClass::Correct => "correct",
        GradeClass::Partial => "partial",
        GradeClass::Incorrect => "incorrect",
    }
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Validation(format!("cannot serialize report: {e}")))
    }

    /// Plain-text tables for terminals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        for (split, r) in &self.splits {
            let _ = writeln!(out, "[{}] answers={} rmse={:.4}", split_name(*split), r.answers, r.rmse);
            let _ = writeln!(
                out,
                "{:<16} {:>7} {:>6} {:>8} {:>8} {:>8} {:>8}",
                "question", "answers", "items", "rmse", "acc", "macroF1", "wF1"
            );
            let mut row = |name: &str, n: usize, items: String, rmse: f64, nc: &NineClassReport<f64>| {
                let _ = writeln!(
                    out,
                    "{:<16} {:>7} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                    name, n, items, rmse, nc.accuracy, nc.macro_f1, nc.weighted_f1
                );
            };
            for (qid, q) in &r.questions {
                row(qid, q.answers, q.rubric_length.to_string(), q.rmse, &q.nine_class);
            }
            row("all", r.answers, "-".into(), r.rmse, &r.nine_class);
            for (metric, c) in &r.rubric_length_correlation {
                let _ = match (&c.correlation, &c.note) {
                    (Some(c), _) => writeln!(out, "rubric length vs {metric}: r={:.4} p={:.4}", c.r, c.p_value),
                    (None, note) => writeln!(out, "rubric length vs {metric}: {}", note.as_deref().unwrap_or("n/a")),
                };
            }
            out.push('\n');
        }
        if let Some(p) = &self.token_prf {
            let _ = writeln!(
                out,
                "token macro P/R/F1 vs silver: {:.4} / {:.4} / {:.4}\n",
                p.precision, p.recall, p.f1
            );
        }
        let _ = writeln!(out, "{:<10} {:>7} {:>8} {:>13} {:>10}", "class", "answers", "cues", "tokens/cue", "cue tok %");
        for (c, g) in &self.task_metrics_by_class {
            let _ = writeln!(
                out,
                "{:<10} {:>7} {:>8.3} {:>13.3} {:>10.3}",
                class_name(*c),
                g.answers,
                g.num_cues,
                g.avg_tokens_per_cue,
                g.pct_cue_tokens
            );
        }
        out
    }
}
