use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{HeadChoice, PipelineConfig};
use super::report::{build_report, EvalReport};
use crate::corpus::{
    load_corpus, load_explanations, load_rubrics, render_markdown, write_explanations, AnswerRecord,
    ExplanationFormat, GradeExplanation, Rubric, Split,
};
use crate::cue::{
    answer_spans, assign_spans, duplicate_spans, load_external_probs, task_metrics, JustificationSpan, Provenance,
    TaskMetrics,
};
use crate::grading::{
    awarded_points, explain, load_models, load_scoring_vectors, scoring_vector_fuzzy, scoring_vector_hard,
    summation_grade, tree_fit, tree_path, tree_predict, write_models, write_scoring_vectors, DecisionTreeModel,
    HeadResult, ScoringVector, Strategy, SummationParams, TreeParams,
};
use crate::jsonl::{self, FORMAT_VERSION};
use crate::similarity::{is_content, load_contextual_export, load_static_table, EmbeddingTable};
use crate::text::{
    annotate_with, generate_candidates, load_pre_annotations, segment_sentences, AnnotatedDoc, SegmentConfig,
};
use crate::weak::{
    aggregate_simple, apply_labeling_functions, hmm_fit, hmm_posterior, load_silver_labels, write_silver_labels,
    write_vote_matrices, HmmParams, SilverLabels, VoteMatrix,
};
use crate::{eval, float9, Error, Result};

pub const ANNOTATIONS: &str = "annotations.jsonl";
pub const VOTES: &str = "votes.jsonl";
pub const SILVER: &str = "silver.jsonl";
pub const HMM: &str = "hmm.json";
pub const SPANS: &str = "spans.jsonl";
pub const VECTORS: &str = "vectors.jsonl";
pub const MODELS: &str = "models.jsonl";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const EXPLANATIONS: &str = "explanations.jsonl";
pub const EXPLANATIONS_MD: &str = "explanations.md";
pub const REPORT: &str = "report.json";

/// The artifact directory shared by all stages.
#[derive(Debug, Clone)]
pub struct Workdir {
    root: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workdir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Path of an artifact that must already exist.
    pub fn require(&self, name: &str) -> Result<PathBuf> {
        require(self.path(name))
    }

    fn create(&self) -> Result<()> {
        std::fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))
    }
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(path))
    }
}

fn configured(path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    let p = path
        .clone()
        .ok_or_else(|| Error::Validation(format!("paths.{key} is not configured")))?;
    require(p)
}

/// One-line account of a stage run.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub stage: &'static str,
    pub counts: Vec<(&'static str, String)>,
    pub warnings: Vec<String>,
}

impl StageSummary {
    fn new(stage: &'static str) -> Self {
        StageSummary {
            stage,
            counts: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn count(mut self, key: &'static str, value: impl ToString) -> Self {
        self.counts.push((key, value.to_string()));
        self
    }
}

impl std::fmt::Display for StageSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:", self.stage)?;
        for (k, v) in &self.counts {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Answer,
    RubricItem,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRecord {
    format_version: String,
    kind: DocKind,
    question_id: String,
    #[serde(flatten)]
    doc: AnnotatedDoc,
}

/// Annotated answers in corpus order and rubric items per question.
/// Item `i` of question `q` has document id `q#i`.
#[derive(Debug, Clone, Default)]
pub struct Annotations {
    pub answers: Vec<(String, AnnotatedDoc)>,
    pub items: BTreeMap<String, Vec<AnnotatedDoc>>,
}

impl Annotations {
    fn items_for(&self, question_id: &str) -> Result<&[AnnotatedDoc]> {
        self.items
            .get(question_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Validation(format!("no annotated rubric for question {question_id}")))
    }

    fn all_docs(&self) -> Vec<&AnnotatedDoc> {
        self.answers
            .iter()
            .map(|(_, d)| d)
            .chain(self.items.values().flatten())
            .collect()
    }

    fn by_id(&self) -> HashMap<&str, (&str, &AnnotatedDoc)> {
        self.answers.iter().map(|(q, d)| (d.id.as_str(), (q.as_str(), d))).collect()
    }
}

pub fn item_doc_id(question_id: &str, item: usize) -> String {
    format!("{question_id}#{item}")
}

pub fn write_annotations(ann: &Annotations, path: &Path) -> Result<()> {
    let answers = ann.answers.iter().map(|(q, d)| (DocKind::Answer, q, d));
    let items = ann
        .items
        .iter()
        .flat_map(|(q, docs)| docs.iter().map(move |d| (DocKind::RubricItem, q, d)));
    let lines = jsonl::to_lines(answers.chain(items).map(|(kind, q, d)| AnnotationRecord {
        format_version: FORMAT_VERSION.to_string(),
        kind,
        question_id: q.clone(),
        doc: d.clone(),
    }))?;
    jsonl::write_atomic(path, lines.as_bytes())
}

pub fn load_annotations(path: &Path) -> Result<Annotations> {
    let mut ann = Annotations::default();
    for (_, rec) in jsonl::read_records::<AnnotationRecord>(path)? {
        jsonl::check_version(path, &rec.format_version)?;
        match rec.kind {
            DocKind::Answer => ann.answers.push((rec.question_id, rec.doc)),
            DocKind::RubricItem => ann.items.entry(rec.question_id).or_default().push(rec.doc),
        }
    }
    Ok(ann)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmArtifact {
    pub format_version: String,
    pub function_ids: Vec<String>,
    pub params: HmmParams<f64>,
    pub objective: Vec<f64>,
    pub all_abstain: bool,
}

/// Cue spans of one answer with the probabilities they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub format_version: String,
    pub answer_id: String,
    pub question_id: String,
    pub provenance: Provenance,
    #[serde(with = "float9::vec")]
    pub token_probs: Vec<f64>,
    pub spans: Vec<JustificationSpan<f64>>,
    pub metrics: TaskMetrics<f64>,
    pub duplicate_spans: usize,
}

pub fn load_span_records(path: &Path) -> Result<Vec<SpanRecord>> {
    jsonl::read_records::<SpanRecord>(path)?
        .into_iter()
        .map(|(_, r)| {
            jsonl::check_version(path, &r.format_version)?;
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadFit {
    pub n_train: usize,
    #[serde(with = "float9")]
    pub tree_rmse: f64,
    #[serde(with = "float9")]
    pub summation_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionFit {
    #[serde(flatten)]
    pub fit: HeadFit,
    pub depth: usize,
    pub leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub format_version: String,
    pub tree: TreeParams,
    pub summation: SummationParams,
    pub questions: BTreeMap<String, QuestionFit>,
    pub overall: Option<HeadFit>,
    /// Questions without training answers; they have no tree.
    pub skipped_questions: Vec<String>,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    jsonl::write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub workdir: Workdir,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, workdir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            config,
            workdir: Workdir::new(workdir),
        })
    }

    fn corpus(&self) -> Result<Vec<AnswerRecord>> {
        load_corpus(&configured(&self.config.paths.corpus, "corpus")?)
    }

    fn rubrics(&self) -> Result<BTreeMap<String, Rubric>> {
        load_rubrics(&configured(&self.config.paths.rubrics, "rubrics")?)
    }

    fn annotations(&self) -> Result<Annotations> {
        load_annotations(&self.workdir.require(ANNOTATIONS)?)
    }

    /// Static table if configured, else one-hot over the content vocabulary;
    /// a contextual export, when configured, takes precedence per token.
    pub fn embedding_table(&self, ann: &Annotations) -> Result<EmbeddingTable<f64>> {
        let paths = &self.config.paths;
        let base = match &paths.embeddings {
            Some(p) => Some(load_static_table(&require(p.clone())?)?),
            None if paths.contextual_embeddings.is_some() => None,
            None => {
                let vocab: BTreeSet<String> = ann
                    .all_docs()
                    .iter()
                    .flat_map(|d| d.tokens.iter().filter(|t| is_content(t)).map(|t| t.lower()))
                    .collect();
                if vocab.is_empty() {
                    return Err(Error::Validation("corpus has no content tokens".into()));
                }
                Some(EmbeddingTable::one_hot(&vocab.into_iter().collect::<Vec<_>>())?)
            }
        };
        match &paths.contextual_embeddings {
            Some(p) => load_contextual_export(&require(p.clone())?, &ann.all_docs(), base),
            None => Ok(base.expect("static or one-hot table")),
        }
    }

    pub fn annotate(&self) -> Result<StageSummary> {
        let corpus = self.corpus()?;
        let rubrics = self.rubrics()?;
        let pre = match &self.config.paths.pre_annotations {
            Some(p) => load_pre_annotations(&require(p.clone())?)?,
            None => BTreeMap::new(),
        };
        let answers: Vec<&AnswerRecord> = corpus
            .iter()
            .filter(|a| self.config.language.is_none_or(|l| a.language == l))
            .collect();
        let mut ann = Annotations::default();
        for a in &answers {
            if !rubrics.contains_key(&a.question_id) {
                return Err(Error::Validation(format!(
                    "answer {}: no rubric for question {}",
                    a.answer_id, a.question_id
                )));
            }
            let tokens = annotate_with(&a.student_answer, a.language, pre.get(&a.answer_id).map(Vec::as_slice))
                .map_err(|e| Error::Validation(format!("answer {}: {e}", a.answer_id)))?;
            ann.answers.push((
                a.question_id.clone(),
                AnnotatedDoc {
                    id: a.answer_id.clone(),
                    language: a.language,
                    text: a.student_answer.clone(),
                    tokens,
                },
            ));
        }
        for (qid, rubric) in &rubrics {
            let Some(first) = answers.iter().find(|a| &a.question_id == qid) else {
                continue;
            };
            let lang = rubric.language.unwrap_or(first.language);
            let docs = rubric
                .items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let id = item_doc_id(qid, i);
                    let tokens = annotate_with(&item.key_element, lang, pre.get(&id).map(Vec::as_slice))
                        .map_err(|e| Error::Validation(format!("rubric item {id}: {e}")))?;
                    Ok(AnnotatedDoc {
                        id,
                        language: lang,
                        text: item.key_element.clone(),
                        tokens,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ann.items.insert(qid.clone(), docs);
        }
        self.workdir.create()?;
        write_annotations(&ann, &self.workdir.path(ANNOTATIONS))?;
        let tokens: usize = ann.answers.iter().map(|(_, d)| d.len()).sum();
        Ok(StageSummary::new("annotate")
            .count("answers", ann.answers.len())
            .count("questions", ann.items.len())
            .count("rubric_items", ann.items.values().map(Vec::len).sum::<usize>())
            .count("tokens", tokens))
    }

    pub fn silver(&self) -> Result<StageSummary> {
        let ann = self.annotations()?;
        let table = self.embedding_table(&ann)?;
        let seg = SegmentConfig::default();
        let matrices: Vec<VoteMatrix<f64>> = ann
            .answers
            .par_iter()
            .map(|(qid, doc)| {
                let sentences = segment_sentences(&doc.tokens);
                let candidates = generate_candidates(&doc.tokens, &sentences, &seg);
                apply_labeling_functions(doc, ann.items_for(qid)?, &candidates, &self.config.labeling, &table)
            })
            .collect::<Result<_>>()?;
        write_vote_matrices(&matrices, &self.workdir.path(VOTES))?;
        let mut summary = StageSummary::new("silver");
        let labels: Vec<SilverLabels<f64>> = match self.config.silver.aggregator.simple() {
            Some(method) => {
                summary = summary.count("aggregator", format!("{method:?}"));
                matrices.iter().map(|m| aggregate_simple(m, method)).collect()
            }
            None => {
                let fit = hmm_fit(&matrices, &self.config.silver.hmm)?;
                if fit.all_abstain {
                    summary.warnings.push("every labeling function abstained on every token".into());
                }
                let labels = matrices
                    .par_iter()
                    .map(|m| hmm_posterior(&fit.params, m))
                    .collect::<Result<_>>()?;
                write_json(
                    &HmmArtifact {
                        format_version: FORMAT_VERSION.to_string(),
                        function_ids: matrices.first().map(|m| m.function_ids.clone()).unwrap_or_default(),
                        params: fit.params,
                        objective: fit.objective,
                        all_abstain: fit.all_abstain,
                    },
                    &self.workdir.path(HMM),
                )?;
                summary = summary.count("aggregator", "hmm");
                labels
            }
        };
        write_silver_labels(&labels, &self.workdir.path(SILVER))?;
        let threshold = self.config.spans.threshold;
        let cue_tokens: usize = labels.iter().map(|l| l.probs.iter().filter(|&&p| p > threshold).count()).sum();
        let tokens: usize = labels.iter().map(|l| l.probs.len()).sum();
        Ok(summary
            .count("answers", labels.len())
            .count("tokens", tokens)
            .count("cue_tokens", cue_tokens))
    }

    /// Token probabilities from `tagger` (or the configured external file),
    /// else from the silver labels.
    pub fn spans(&self, tagger: Option<&Path>) -> Result<StageSummary> {
        let external = tagger
            .map(Path::to_path_buf)
            .or_else(|| self.config.paths.external_tagger.clone());
        let source = match &external {
            Some(p) => require(p.clone())?,
            None => self.workdir.require(SILVER)?,
        };
        let ann = self.annotations()?;
        let docs: BTreeMap<String, AnnotatedDoc> =
            ann.answers.iter().map(|(_, d)| (d.id.clone(), d.clone())).collect();
        let (provenance, mut probs): (Provenance, HashMap<String, Vec<f64>>) = if external.is_some() {
            let out = load_external_probs::<f64>(&source, &docs)?;
            (Provenance::External, out.into_iter().map(|o| (o.answer_id, o.token_probs)).collect())
        } else {
            let labels = load_silver_labels::<f64>(&source)?;
            (Provenance::HmmBaseline, labels.into_iter().map(|l| (l.answer_id, l.probs)).collect())
        };
        let table = self.embedding_table(&ann)?;
        let threshold = self.config.spans.threshold;
        let inputs: Vec<(&String, &AnnotatedDoc, Vec<f64>)> = ann
            .answers
            .iter()
            .map(|(q, d)| {
                let p = probs.remove(&d.id).ok_or_else(|| {
                    Error::Validation(format!("{}: no token probabilities for answer {}", source.display(), d.id))
                })?;
                Ok((q, d, p))
            })
            .collect::<Result<_>>()?;
        let records: Vec<SpanRecord> = inputs
            .into_par_iter()
            .map(|(qid, doc, token_probs)| {
                let mut spans = answer_spans(doc, &token_probs, threshold)?;
                assign_spans(doc, &mut spans, ann.items_for(qid)?, &table)?;
                let texts: Vec<String> = spans.iter().map(|s| doc.span_text(s.start, s.end)).collect();
                Ok(SpanRecord {
                    format_version: FORMAT_VERSION.to_string(),
                    answer_id: doc.id.clone(),
                    question_id: qid.clone(),
                    provenance,
                    metrics: task_metrics(&spans, doc.len())?,
                    duplicate_spans: duplicate_spans(&texts),
                    token_probs,
                    spans,
                })
            })
            .collect::<Result<_>>()?;
        jsonl::write_atomic(&self.workdir.path(SPANS), jsonl::to_lines(&records)?.as_bytes())?;
        let n_spans: usize = records.iter().map(|r| r.spans.len()).sum();
        let dups: usize = records.iter().map(|r| r.duplicate_spans).sum();
        Ok(StageSummary::new("spans")
            .count("source", source.display())
            .count("answers", records.len())
            .count("spans", n_spans)
            .count("duplicate_spans", dups))
    }

    pub fn score_vectors(&self) -> Result<StageSummary> {
        let records = load_span_records(&self.workdir.require(SPANS)?)?;
        let ann = self.annotations()?;
        let by_id = ann.by_id();
        let table = self.embedding_table(&ann)?;
        let strategy = self.config.strategy;
        let vectors: Vec<ScoringVector<f64>> = records
            .par_iter()
            .map(|r| {
                let (qid, doc) = by_id
                    .get(r.answer_id.as_str())
                    .ok_or_else(|| Error::Validation(format!("spans for unannotated answer {}", r.answer_id)))?;
                let items = ann.items_for(qid)?;
                match strategy {
                    Strategy::Fuzzy => Ok(scoring_vector_fuzzy(doc, qid, &r.spans, items, &table)),
                    Strategy::Hard => scoring_vector_hard(&doc.id, qid, &r.spans, items.len()),
                }
            })
            .collect::<Result<_>>()?;
        write_scoring_vectors(&vectors, &self.workdir.path(VECTORS))?;
        let zero = vectors.iter().filter(|v| v.values.iter().all(|&x| x == 0.0)).count();
        Ok(StageSummary::new("score-vectors")
            .count("strategy", format!("{strategy:?}").to_lowercase())
            .count("vectors", vectors.len())
            .count("zero_vectors", zero))
    }

    pub fn train_head(&self) -> Result<StageSummary> {
        let vectors = load_scoring_vectors::<f64>(&self.workdir.require(VECTORS)?)?;
        let corpus = self.corpus()?;
        let rubrics = self.rubrics()?;
        let gold: HashMap<&str, &AnswerRecord> = corpus.iter().map(|a| (a.answer_id.as_str(), a)).collect();
        let mut per_question: BTreeMap<&str, (Vec<&[f64]>, Vec<f64>)> = BTreeMap::new();
        let mut questions: BTreeSet<&str> = BTreeSet::new();
        for v in &vectors {
            let rec = gold
                .get(v.answer_id.as_str())
                .ok_or_else(|| Error::Validation(format!("vector for unknown answer {}", v.answer_id)))?;
            questions.insert(&v.question_id);
            if rec.split == Split::Train {
                let e = per_question.entry(&v.question_id).or_default();
                e.0.push(&v.values);
                e.1.push(rec.score);
            }
        }
        let params = self.config.head.tree;
        let summation = self.config.head.summation;
        let fitted: Vec<(String, DecisionTreeModel<f64>, QuestionFit)> = per_question
            .par_iter()
            .map(|(qid, (x, y))| {
                let rubric = rubrics
                    .get(*qid)
                    .ok_or_else(|| Error::Validation(format!("no rubric for question {qid}")))?;
                let model = tree_fit(qid, x, y, &params)?;
                let tree_pred = x.iter().map(|v| tree_predict(&model, v)).collect::<Result<Vec<_>>>()?;
                let sum_pred = x
                    .iter()
                    .map(|v| summation_grade(v, rubric, &summation))
                    .collect::<Result<Vec<_>>>()?;
                let fit = QuestionFit {
                    fit: HeadFit {
                        n_train: x.len(),
                        tree_rmse: eval::rmse(&tree_pred, y)?,
                        summation_rmse: eval::rmse(&sum_pred, y)?,
                    },
                    depth: model.depth(),
                    leaves: model.num_leaves(),
                };
                Ok((qid.to_string(), model, fit))
            })
            .collect::<Result<_>>()?;
        let n: usize = fitted.iter().map(|(_, _, f)| f.fit.n_train).sum();
        // pooled RMSE from per-question mean squared errors
        let pooled = |get: fn(&HeadFit) -> f64| {
            (fitted.iter().map(|(_, _, f)| get(&f.fit).powi(2) * f.fit.n_train as f64).sum::<f64>() / n as f64).sqrt()
        };
        let overall = (n > 0).then(|| HeadFit {
            n_train: n,
            tree_rmse: pooled(|f| f.tree_rmse),
            summation_rmse: pooled(|f| f.summation_rmse),
        });
        let report = TrainReport {
            format_version: FORMAT_VERSION.to_string(),
            tree: params,
            summation,
            skipped_questions: questions
                .iter()
                .filter(|q| !per_question.contains_key(*q))
                .map(|q| q.to_string())
                .collect(),
            questions: fitted.iter().map(|(q, _, f)| (q.clone(), f.clone())).collect(),
            overall,
        };
        let models: Vec<DecisionTreeModel<f64>> = fitted.into_iter().map(|(_, m, _)| m).collect();
        write_models(&models, &self.workdir.path(MODELS))?;
        write_json(&report, &self.workdir.path(TRAIN_REPORT))?;
        let mut summary = StageSummary::new("train-head")
            .count("trees", models.len())
            .count("training_answers", n);
        if let Some(o) = overall {
            summary = summary
                .count("tree_rmse", format!("{:.4}", o.tree_rmse))
                .count("summation_rmse", format!("{:.4}", o.summation_rmse));
        }
        for q in &report.skipped_questions {
            summary.warnings.push(format!("question {q} has no training answers"));
        }
        Ok(summary)
    }

    pub fn grade(&self) -> Result<StageSummary> {
        let vectors = load_scoring_vectors::<f64>(&self.workdir.require(VECTORS)?)?;
        let records = load_span_records(&self.workdir.require(SPANS)?)?;
        let ann = self.annotations()?;
        let rubrics = self.rubrics()?;
        let head = self.config.head.kind;
        let models: BTreeMap<String, DecisionTreeModel<f64>> = match head {
            HeadChoice::DecisionTree => load_models(&self.workdir.require(MODELS)?)?
                .into_iter()
                .map(|m| (m.question_id.clone(), m))
                .collect(),
            HeadChoice::Summation => BTreeMap::new(),
        };
        let by_id = ann.by_id();
        let spans: HashMap<&str, &SpanRecord> = records.iter().map(|r| (r.answer_id.as_str(), r)).collect();
        let params = self.config.head.summation;
        let explanations: Vec<GradeExplanation<f64>> = vectors
            .par_iter()
            .map(|v| {
                let (_, doc) = by_id
                    .get(v.answer_id.as_str())
                    .ok_or_else(|| Error::Validation(format!("vector for unannotated answer {}", v.answer_id)))?;
                let rubric = rubrics
                    .get(&v.question_id)
                    .ok_or_else(|| Error::Validation(format!("no rubric for question {}", v.question_id)))?;
                v.validate(rubric.len())?;
                let result = match head {
                    HeadChoice::Summation => HeadResult::Summation {
                        score: summation_grade(&v.values, rubric, &params)?,
                        awarded: awarded_points(&v.values, rubric, &params)?,
                    },
                    HeadChoice::DecisionTree => {
                        let model = models.get(&v.question_id).ok_or_else(|| {
                            Error::Validation(format!("no trained tree for question {}", v.question_id))
                        })?;
                        let (score, path) = tree_path(model, &v.values)?;
                        HeadResult::Tree { score, path }
                    }
                };
                let answer_spans = spans.get(v.answer_id.as_str()).map_or(&[][..], |r| r.spans.as_slice());
                let e = explain(doc, answer_spans, v, result);
                e.validate(rubric.len())?;
                Ok(e)
            })
            .collect::<Result<_>>()?;
        write_explanations(&explanations, &self.workdir.path(EXPLANATIONS), ExplanationFormat::Machine, None)?;
        write_explanations(
            &explanations,
            &self.workdir.path(EXPLANATIONS_MD),
            ExplanationFormat::Human,
            Some(&rubrics),
        )?;
        let mean = explanations.iter().map(|e| e.final_score).sum::<f64>() / explanations.len().max(1) as f64;
        Ok(StageSummary::new("grade")
            .count("head", format!("{head:?}").to_lowercase())
            .count("graded", explanations.len())
            .count("mean_score", format!("{mean:.4}")))
    }

    pub fn evaluate(&self) -> Result<(StageSummary, EvalReport)> {
        let explanations = load_explanations::<f64>(&self.workdir.require(EXPLANATIONS)?)?;
        let records = load_span_records(&self.workdir.require(SPANS)?)?;
        let silver_path = self.workdir.path(SILVER);
        let silver = if silver_path.is_file() {
            Some(load_silver_labels::<f64>(&silver_path)?)
        } else {
            None
        };
        let corpus = self.corpus()?;
        let rubrics = self.rubrics()?;
        let report = build_report(&explanations, &corpus, &rubrics, &records, silver.as_deref(), self.config.spans.threshold)?;
        write_json(&report, &self.workdir.path(REPORT))?;
        let mut summary = StageSummary::new("evaluate").count("answers", explanations.len());
        for (split, r) in &report.splits {
            summary = summary.count(split_name(*split), format!("rmse={:.4}", r.rmse));
        }
        Ok((summary, report))
    }

    /// Markdown explanation for one graded answer.
    pub fn inspect(&self, answer_id: &str) -> Result<String> {
        let explanations = load_explanations::<f64>(&self.workdir.require(EXPLANATIONS)?)?;
        let e = explanations
            .iter()
            .find(|e| e.answer_id == answer_id)
            .ok_or_else(|| Error::Validation(format!("no graded answer {answer_id:?}")))?;
        let rubrics = self.config.paths.rubrics.as_ref().filter(|p| p.is_file()).map(|p| load_rubrics(p)).transpose()?;
        Ok(render_markdown(e, rubrics.as_ref().and_then(|r| r.get(&e.question_id))))
    }

    /// annotate → silver → spans → score-vectors → train-head → grade → evaluate.
    pub fn run_all(&self) -> Result<Vec<StageSummary>> {
        let mut out = vec![self.annotate()?, self.silver()?, self.spans(None)?, self.score_vectors()?];
        out.push(self.train_head()?);
        out.push(self.grade()?);
        out.push(self.evaluate()?.0);
        Ok(out)
    }
}

pub(crate) fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Dev => "dev",
        Split::Test => "test",
    }
}
