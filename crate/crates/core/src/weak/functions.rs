//! The labeling-function registry and its application to one answer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::votes::VoteMatrix;
use crate::similarity::{
    self, embed_score, meteor_lite, word_alignment_coverage, EmbeddingTable, TokenKey, TokenView,
};
use crate::text::{is_enumeration_marker, AnnotatedDoc, Candidate, CandidateKind, NO_DEP};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matching {
    Hard,
    Soft,
}

/// Which candidates a function looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Sentence,
    Phrase,
    Both,
}

impl Granularity {
    pub fn accepts(self, kind: CandidateKind) -> bool {
        match self {
            Granularity::Both => true,
            Granularity::Sentence => kind == CandidateKind::Sentence,
            Granularity::Phrase => kind == CandidateKind::Phrase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Feature sequences must be equal.
    Equal(TokenView),
    /// Lemmatized noun chunks must be equal.
    NounPhrases,
    NgramOverlap(usize),
    RougeN(usize),
    RougeL,
    /// Coverage of the item by a one-to-one word alignment, thresholded.
    WordAlignment,
    EmbedF1,
    Bleu,
    Meteor,
    Jaccard(TokenKey),
    Edit(TokenKey),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelingFunction {
    pub id: &'static str,
    pub measure: Measure,
    pub granularity: Granularity,
    pub matching: Matching,
}

impl LabelingFunction {
    pub fn is_soft(&self) -> bool {
        self.matching == Matching::Soft
    }

    fn uses_dependencies(&self) -> bool {
        matches!(self.measure, Measure::Equal(v) if v.key == TokenKey::Dep)
    }

    /// True when the vote should be the threshold-passing score itself
    /// rather than a binary 1.
    fn thresholded(&self) -> bool {
        self.is_soft() || self.measure == Measure::WordAlignment
    }
}

const fn hard(id: &'static str, key: TokenKey, drop_stopwords: bool) -> LabelingFunction {
    LabelingFunction {
        id,
        measure: Measure::Equal(TokenView::new(key, drop_stopwords)),
        granularity: Granularity::Sentence,
        matching: Matching::Hard,
    }
}

const fn soft(id: &'static str, measure: Measure, granularity: Granularity) -> LabelingFunction {
    LabelingFunction {
        id,
        measure,
        granularity,
        matching: Matching::Soft,
    }
}

/// Every labeling function, in vote-matrix row order.
pub fn registry() -> Vec<LabelingFunction> {
    use Granularity::{Both, Phrase};
    vec![
        LabelingFunction {
            id: "noun_phrase_match",
            measure: Measure::NounPhrases,
            granularity: Granularity::Sentence,
            matching: Matching::Hard,
        },
        hard("lemma_match", TokenKey::Lemma, false),
        hard("pos_match", TokenKey::Pos, false),
        hard("shape_match", TokenKey::Shape, false),
        hard("stem_match", TokenKey::Stem, false),
        hard("dep_match", TokenKey::Dep, false),
        hard("lemma_match_nostop", TokenKey::Lemma, true),
        hard("stem_match_nostop", TokenKey::Stem, true),
        hard("pos_match_nostop", TokenKey::Pos, true),
        hard("dep_match_nostop", TokenKey::Dep, true),
        soft("ngram_overlap_1", Measure::NgramOverlap(1), Phrase),
        soft("ngram_overlap_2", Measure::NgramOverlap(2), Phrase),
        soft("ngram_overlap_3", Measure::NgramOverlap(3), Phrase),
        soft("ngram_overlap_4", Measure::NgramOverlap(4), Phrase),
        soft("ngram_overlap_5", Measure::NgramOverlap(5), Phrase),
        soft("rouge_1", Measure::RougeN(1), Phrase),
        soft("rouge_2", Measure::RougeN(2), Phrase),
        soft("rouge_3", Measure::RougeN(3), Phrase),
        soft("rouge_4", Measure::RougeN(4), Phrase),
        soft("rouge_5", Measure::RougeN(5), Phrase),
        soft("rouge_l", Measure::RougeL, Both),
        LabelingFunction {
            id: "word_alignment",
            measure: Measure::WordAlignment,
            granularity: Granularity::Sentence,
            matching: Matching::Hard,
        },
        soft("bertscore", Measure::EmbedF1, Both),
        soft("bleu", Measure::Bleu, Both),
        soft("meteor", Measure::Meteor, Both),
        soft("jaccard", Measure::Jaccard(TokenKey::Surface), Phrase),
        soft("jaccard_lemma", Measure::Jaccard(TokenKey::Lemma), Phrase),
        soft("edit_distance", Measure::Edit(TokenKey::Surface), Phrase),
        soft("edit_distance_lemma", Measure::Edit(TokenKey::Lemma), Phrase),
    ]
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelingConfig {
    /// Threshold for every thresholded function without an override.
    pub default_threshold: f64,
    /// Per-function overrides keyed by function id.
    pub thresholds: BTreeMap<String, f64>,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            default_threshold: DEFAULT_THRESHOLD,
            thresholds: BTreeMap::new(),
        }
    }
}

impl LabelingConfig {
    pub fn threshold(&self, id: &str) -> f64 {
        self.thresholds.get(id).copied().unwrap_or(self.default_threshold)
    }

    pub fn validate(&self) -> Result<()> {
        let reg = registry();
        if !(0.0..=1.0).contains(&self.default_threshold) {
            return Err(Error::Validation(format!(
                "default_threshold {} outside [0,1]",
                self.default_threshold
            )));
        }
        for (id, t) in &self.thresholds {
            if !reg.iter().any(|f| f.id == id) {
                return Err(Error::Validation(format!("threshold for unknown labeling function {id:?}")));
            }
            if !(0.0..=1.0).contains(t) {
                return Err(Error::Validation(format!("threshold for {id} outside [0,1]: {t}")));
            }
        }
        Ok(())
    }
}

/// Every feature view a labeling function may compare, computed once per
/// token range.
struct Features<'a, F> {
    views: Vec<(TokenView, Vec<String>)>,
    missing_dep: bool,
    noun_phrases: Vec<String>,
    meteor: Vec<(String, String)>,
    vectors: Vec<&'a [F]>,
    align: Vec<similarity::AlignToken<'a, F>>,
}

const VIEWS: [TokenView; 11] = [
    TokenView::new(TokenKey::Surface, false),
    TokenView::new(TokenKey::Lemma, false),
    TokenView::new(TokenKey::Lemma, true),
    TokenView::new(TokenKey::Stem, false),
    TokenView::new(TokenKey::Stem, true),
    TokenView::new(TokenKey::Pos, false),
    TokenView::new(TokenKey::Pos, true),
    TokenView::new(TokenKey::Shape, false),
    TokenView::new(TokenKey::Dep, false),
    TokenView::new(TokenKey::Dep, true),
    TokenView::new(TokenKey::Surface, true),
];

impl<'a, F: Scalar> Features<'a, F> {
    fn new(doc: &'a AnnotatedDoc, start: usize, end: usize, table: &'a EmbeddingTable<F>) -> Self {
        let toks = &doc.tokens[start..end];
        Features {
            views: VIEWS.iter().map(|v| (*v, v.keys(toks))).collect(),
            missing_dep: toks.iter().any(|t| !t.is_punct() && t.dep == NO_DEP),
            noun_phrases: noun_phrases(toks),
            meteor: similarity::meteor_tokens(toks),
            vectors: table.content_vectors(doc, start, end),
            align: table.content_align_tokens(doc, start, end),
        }
    }

    fn view(&self, v: TokenView) -> &[String] {
        &self.views.iter().find(|(k, _)| *k == v).expect("view precomputed").1
    }
}

/// Lemmatized maximal ADJ/NOUN/NUM runs that contain a noun.
fn noun_phrases(tokens: &[crate::text::AnnotatedToken]) -> Vec<String> {
    let mut out = Vec::new();
    let mut run: Vec<&str> = Vec::new();
    let mut has_noun = false;
    let mut flush = |run: &mut Vec<&str>, has_noun: &mut bool| {
        if *has_noun {
            out.push(run.join(" "));
        }
        run.clear();
        *has_noun = false;
    };
    for (i, t) in tokens.iter().enumerate() {
        match t.pos.as_str() {
            "NOUN" | "PROPN" => {
                run.push(&t.lemma);
                has_noun = true;
            }
            "ADJ" | "NUM" => run.push(&t.lemma),
            // participle modifier: "routing table", "distributed system"
            "VERB"
                if (t.lemma.ends_with("ing") || t.lemma.ends_with("ed"))
                    && tokens.get(i + 1).is_some_and(|n| matches!(n.pos.as_str(), "NOUN" | "PROPN")) =>
            {
                run.push(&t.lemma)
            }
            _ => flush(&mut run, &mut has_noun),
        }
    }
    flush(&mut run, &mut has_noun);
    out
}

/// Scores a candidate against an item; `None` means the function abstains.
fn score<F: Scalar>(lf: &LabelingFunction, c: &Features<'_, F>, r: &Features<'_, F>) -> Option<F> {
    let eq = |a: &[String], b: &[String]| (!a.is_empty() && a == b).then(F::one);
    match lf.measure {
        Measure::Equal(view) => {
            if view.key == TokenKey::Dep && (c.missing_dep || r.missing_dep) {
                return None;
            }
            eq(c.view(view), r.view(view))
        }
        Measure::NounPhrases => eq(&c.noun_phrases, &r.noun_phrases),
        Measure::NgramOverlap(n) => {
            let v = TokenView::new(TokenKey::Surface, false);
            Some(similarity::ngram_overlap(c.view(v), r.view(v), n))
        }
        Measure::RougeN(n) => {
            let v = TokenView::new(TokenKey::Surface, false);
            Some(similarity::rouge_n(c.view(v), r.view(v), n))
        }
        Measure::RougeL => {
            let v = TokenView::new(TokenKey::Surface, false);
            Some(similarity::rouge_l(c.view(v), r.view(v)))
        }
        Measure::Bleu => {
            let v = TokenView::new(TokenKey::Surface, false);
            Some(similarity::bleu(c.view(v), r.view(v), 4))
        }
        Measure::Meteor => Some(meteor_lite(&c.meteor, &r.meteor)),
        Measure::Jaccard(key) => {
            let v = TokenView::new(key, false);
            Some(similarity::jaccard(c.view(v), r.view(v)))
        }
        Measure::Edit(key) => {
            let v = TokenView::new(key, false);
            Some(similarity::edit_similarity(c.view(v), r.view(v)))
        }
        Measure::EmbedF1 => {
            let s = embed_score(&c.vectors, &r.vectors);
            (!s.degenerate).then_some(s.f1)
        }
        Measure::WordAlignment => Some(word_alignment_coverage(&c.align, &r.align)),
    }
}

/// First token of a candidate once a leading enumeration marker is skipped.
fn content_start(answer: &AnnotatedDoc, c: &Candidate) -> usize {
    if c.len() > 2 && is_enumeration_marker(&answer.tokens, c.start) {
        c.start + 2
    } else {
        c.start
    }
}

/// Runs every registered function over `candidates` × `items` and records
/// votes on candidate tokens. Overlapping votes of one function keep the
/// maximum; uncovered tokens abstain.
pub fn apply_labeling_functions<F: Scalar>(
    answer: &AnnotatedDoc,
    items: &[AnnotatedDoc],
    candidates: &[Candidate],
    config: &LabelingConfig,
    table: &EmbeddingTable<F>,
) -> Result<VoteMatrix<F>> {
    if items.is_empty() {
        return Err(Error::Validation(format!(
            "answer {}: rubric has no items",
            answer.id
        )));
    }
    let reg = registry();
    let mut matrix = VoteMatrix::new(
        answer.id.clone(),
        reg.iter().map(|f| f.id.to_string()).collect(),
        reg.iter().map(LabelingFunction::is_soft).collect(),
        answer.len(),
    );
    let item_features: Vec<Features<F>> = items
        .iter()
        .map(|d| Features::new(d, 0, d.len(), table))
        .collect();
    for cand in candidates {
        let start = content_start(answer, cand);
        let cf = Features::new(answer, start, cand.end, table);
        for (j, lf) in reg.iter().enumerate() {
            if !lf.granularity.accepts(cand.kind) {
                continue;
            }
            if lf.uses_dependencies() && cf.missing_dep {
                continue;
            }
            let threshold = F::lit(config.threshold(lf.id));
            let best = item_features
                .iter()
                .filter_map(|rf| score(lf, &cf, rf))
                .map(Scalar::clamp01)
                .filter(|&s| !lf.thresholded() || s >= threshold)
                .fold(None, |acc: Option<F>, s| Some(acc.map_or(s, |a| a.max(s))));
            let Some(best) = best else { continue };
            let vote = if lf.is_soft() { best } else { F::one() };
            for t in cand.start..cand.end {
                matrix.vote_max(j, t, vote);
            }
        }
    }
    Ok(matrix)
}
