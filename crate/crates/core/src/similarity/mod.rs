//! Pairwise text-similarity measures, all scored in `[0, 1]`.

mod embedding;
mod lexical;
mod meteor;

pub use embedding::{
    clamped_cosine, embed_score, is_content, load_contextual_export, load_static_table,
    parse_static_table, word_alignment_coverage, write_static_table, AlignToken, ContextualHeader,
    ContextualRecord, ContextualSpan, EmbedScore, EmbeddingSource, EmbeddingTable,
    ALIGNMENT_MIN_SCORE,
};
pub use lexical::{
    bleu, edit_similarity, jaccard, lcs_len, levenshtein, ngram_overlap, rouge_l, rouge_n,
};
pub use meteor::{meteor_alignment, meteor_lite, MeteorToken};

use serde::{Deserialize, Serialize};

use crate::text::AnnotatedToken;

/// Which token attribute a comparison looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKey {
    /// Lowercased surface form.
    Surface,
    Lemma,
    Stem,
    Pos,
    Shape,
    Dep,
}

/// A feature view of a token sequence. Punctuation is always skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenView {
    pub key: TokenKey,
    pub drop_stopwords: bool,
}

impl TokenView {
    pub const fn new(key: TokenKey, drop_stopwords: bool) -> Self {
        TokenView {
            key,
            drop_stopwords,
        }
    }

    pub fn key_of(&self, t: &AnnotatedToken) -> String {
        match self.key {
            TokenKey::Surface => t.text.to_lowercase(),
            TokenKey::Lemma => t.lemma.clone(),
            TokenKey::Stem => t.stem.clone(),
            TokenKey::Pos => t.pos.clone(),
            TokenKey::Shape => t.shape.clone(),
            TokenKey::Dep => t.dep.clone(),
        }
    }

    pub fn includes(&self, t: &AnnotatedToken) -> bool {
        !t.is_punct() && !(self.drop_stopwords && t.is_stopword)
    }

    pub fn keys(&self, tokens: &[AnnotatedToken]) -> Vec<String> {
        tokens
            .iter()
            .filter(|t| self.includes(t))
            .map(|t| self.key_of(t))
            .collect()
    }
}

/// `(lowercased surface, stem)` pairs for the METEOR aligner.
pub fn meteor_tokens(tokens: &[AnnotatedToken]) -> Vec<(String, String)> {
    tokens
        .iter()
        .filter(|t| !t.is_punct())
        .map(|t| (t.text.to_lowercase(), t.stem.clone()))
        .collect()
}
