//! Embedding tables and the embedding-based matchers (greedy cosine
//! matching and one-to-one word alignment).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::jsonl;
use crate::text::{AnnotatedDoc, AnnotatedToken};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    StaticTable,
    ContextualExport,
}

/// Token vectors keyed by surface form and, for contextual exports, by
/// `(doc_id, token_index)`. Missing keys resolve to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<F> {
    source: EmbeddingSource,
    dimension: usize,
    static_vectors: HashMap<String, Vec<F>>,
    contextual: HashMap<(String, usize), Vec<F>>,
    zero: Vec<F>,
}

impl<F: Scalar> EmbeddingTable<F> {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Validation("embedding dimension must be > 0".into()));
        }
        Ok(EmbeddingTable {
            source: EmbeddingSource::StaticTable,
            dimension,
            static_vectors: HashMap::new(),
            contextual: HashMap::new(),
            zero: vec![F::zero(); dimension],
        })
    }

    pub fn from_static(dimension: usize, vectors: impl IntoIterator<Item = (String, Vec<F>)>) -> Result<Self> {
        let mut t = Self::new(dimension)?;
        for (k, v) in vectors {
            t.insert_static(k, v)?;
        }
        Ok(t)
    }

    /// One-hot vectors over `vocab`, in order.
    pub fn one_hot<S: AsRef<str>>(vocab: &[S]) -> Result<Self> {
        let d = vocab.len();
        Self::from_static(
            d,
            vocab.iter().enumerate().map(|(i, w)| {
                let mut v = vec![F::zero(); d];
                v[i] = F::one();
                (w.as_ref().to_string(), v)
            }),
        )
    }

    pub fn source(&self) -> EmbeddingSource {
        self.source
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn zero_vector(&self) -> &[F] {
        &self.zero
    }

    pub fn insert_static(&mut self, key: String, vector: Vec<F>) -> Result<()> {
        self.check_dim(&vector)?;
        self.static_vectors.insert(key, vector);
        Ok(())
    }

    pub fn insert_contextual(&mut self, doc_id: String, token_index: usize, vector: Vec<F>) -> Result<()> {
        self.check_dim(&vector)?;
        self.source = EmbeddingSource::ContextualExport;
        self.contextual.insert((doc_id, token_index), vector);
        Ok(())
    }

    fn check_dim(&self, v: &[F]) -> Result<()> {
        if v.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn get_static(&self, surface: &str) -> &[F] {
        self.static_vectors
            .get(surface)
            .or_else(|| self.static_vectors.get(&surface.to_lowercase()))
            .map_or(&self.zero, Vec::as_slice)
    }

    /// Contextual vector for the token if exported, else its static vector.
    pub fn token_vector(&self, doc_id: &str, index: usize, token: &AnnotatedToken) -> &[F] {
        if !self.contextual.is_empty() {
            if let Some(v) = self.contextual.get(&(doc_id.to_string(), index)) {
                return v;
            }
        }
        self.get_static(&token.text)
    }

    /// Vectors of the content (non-stopword, non-punctuation) tokens in
    /// `[start, end)` of `doc`.
    pub fn content_vectors<'a>(&'a self, doc: &AnnotatedDoc, start: usize, end: usize) -> Vec<&'a [F]> {
        (start..end)
            .filter(|&i| is_content(&doc.tokens[i]))
            .map(|i| self.token_vector(&doc.id, i, &doc.tokens[i]))
            .collect()
    }

    pub fn content_align_tokens<'a>(
        &'a self,
        doc: &'a AnnotatedDoc,
        start: usize,
        end: usize,
    ) -> Vec<AlignToken<'a, F>> {
        (start..end)
            .filter(|&i| is_content(&doc.tokens[i]))
            .map(|i| AlignToken {
                lemma: &doc.tokens[i].lemma,
                vector: self.token_vector(&doc.id, i, &doc.tokens[i]),
            })
            .collect()
    }
}

pub fn is_content(t: &AnnotatedToken) -> bool {
    !t.is_stopword && !t.is_punct()
}

/// Reads `dim d` followed by one `word f1 … fd` line per entry.
pub fn load_static_table<F: Scalar>(path: &Path) -> Result<EmbeddingTable<F>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_static_table(&text, path)
}

pub fn parse_static_table<F: Scalar>(text: &str, origin: &Path) -> Result<EmbeddingTable<F>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing `dim d` header".into()))?;
    let dim = header
        .trim()
        .strip_prefix("dim")
        .and_then(|d| d.trim().parse::<usize>().ok())
        .ok_or_else(|| err(1, format!("bad header {header:?}, expected `dim d`")))?;
    let mut table = EmbeddingTable::new(dim)?;
    for (idx, line) in lines {
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-blank line");
        let vector = parts
            .map(|p| {
                p.parse::<f64>()
                    .map(F::lit)
                    .map_err(|e| err(idx + 1, format!("bad float {p:?}: {e}")))
            })
            .collect::<Result<Vec<F>>>()?;
        if vector.len() != dim {
            return Err(err(idx + 1, format!("expected {dim} values, found {}", vector.len())));
        }
        table.insert_static(word.to_string(), vector)?;
    }
    Ok(table)
}

pub fn write_static_table<F: Scalar>(table: &EmbeddingTable<F>, path: &Path) -> Result<()> {
    let mut out = format!("dim {}\n", table.dimension);
    let sorted: BTreeMap<&String, &Vec<F>> = table.static_vectors.iter().collect();
    for (w, v) in sorted {
        out.push_str(w);
        for x in v {
            out.push(' ');
            out.push_str(&crate::float9::round9(x.as_f64()).to_string());
        }
        out.push('\n');
    }
    jsonl::write_atomic(path, out.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContextualHeader {
    pub format_version: String,
    pub dim: usize,
    pub model_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContextualSpan {
    pub char_start: usize,
    pub char_end: usize,
    pub vector: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContextualRecord {
    /// Answer id, or `question_id#item_id` for rubric items.
    pub answer_id: String,
    pub spans: Vec<ContextualSpan>,
}

/// Loads a contextual export (header line, then one record per document)
/// and maps character-span vectors onto `docs`' tokens: each token gets
/// the mean of every span vector overlapping it. Static vectors from
/// `base` stay available as fallback.
pub fn load_contextual_export<F: Scalar>(
    path: &Path,
    docs: &[&AnnotatedDoc],
    base: Option<EmbeddingTable<F>>,
) -> Result<EmbeddingTable<F>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let (hidx, hline) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
    let header: ContextualHeader =
        serde_json::from_str(hline).map_err(|e| parse_err(hidx + 1, e.to_string()))?;
    jsonl::check_version(path, &header.format_version)?;
    let mut table = match base {
        Some(t) if t.dimension == header.dim => t,
        Some(t) => {
            return Err(Error::Dimension {
                expected: t.dimension,
                found: header.dim,
            })
        }
        None => EmbeddingTable::new(header.dim)?,
    };
    table.source = EmbeddingSource::ContextualExport;
    let by_id: HashMap<&str, &AnnotatedDoc> = docs.iter().map(|d| (d.id.as_str(), *d)).collect();
    for (idx, line) in lines {
        let rec: ContextualRecord =
            serde_json::from_str(line).map_err(|e| parse_err(idx + 1, e.to_string()))?;
        let doc = by_id
            .get(rec.answer_id.as_str())
            .ok_or_else(|| Error::Validation(format!("unknown answer_id {:?} in {}", rec.answer_id, path.display())))?;
        for (ti, tok) in doc.tokens.iter().enumerate() {
            let overlapping: Vec<&ContextualSpan> = rec
                .spans
                .iter()
                .filter(|s| s.char_start < tok.char_end && tok.char_start < s.char_end)
                .collect();
            if overlapping.is_empty() {
                continue;
            }
            let mut mean = vec![F::zero(); header.dim];
            for s in &overlapping {
                if s.vector.len() != header.dim {
                    return Err(parse_err(
                        idx + 1,
                        format!("vector of length {} in a dim {} export", s.vector.len(), header.dim),
                    ));
                }
                for (m, x) in mean.iter_mut().zip(&s.vector) {
                    *m = *m + F::lit(*x);
                }
            }
            let k = F::from_count(overlapping.len());
            mean.iter_mut().for_each(|m| *m = *m / k);
            table.insert_contextual(doc.id.clone(), ti, mean)?;
        }
    }
    Ok(table)
}

/// Cosine similarity clamped to `[0, 1]`; zero vectors score 0.
pub fn clamped_cosine<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut dot = F::zero();
    let mut na = F::zero();
    let mut nb = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == F::zero() || nb == F::zero() {
        return F::zero();
    }
    (dot / (na * nb).sqrt()).clamp01()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedScore<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
    /// Set when either side had no tokens.
    pub degenerate: bool,
}

/// Greedy max-cosine matching between two vector sequences, without IDF
/// weighting or baseline rescaling.
pub fn embed_score<F: Scalar, V: AsRef<[F]>>(cand: &[V], reference: &[V]) -> EmbedScore<F> {
    if cand.is_empty() || reference.is_empty() {
        return EmbedScore {
            precision: F::zero(),
            recall: F::zero(),
            f1: F::zero(),
            degenerate: true,
        };
    }
    let sims: Vec<Vec<F>> = cand
        .iter()
        .map(|c| reference.iter().map(|r| clamped_cosine(c.as_ref(), r.as_ref())).collect())
        .collect();
    let precision = sims
        .iter()
        .map(|row| row.iter().copied().fold(F::zero(), F::max))
        .sum::<F>()
        / F::from_count(cand.len());
    let recall = (0..reference.len())
        .map(|j| sims.iter().map(|row| row[j]).fold(F::zero(), F::max))
        .sum::<F>()
        / F::from_count(reference.len());
    let f1 = if precision + recall > F::zero() {
        (F::lit(2.0) * precision * recall / (precision + recall)).clamp01()
    } else {
        F::zero()
    };
    EmbedScore {
        precision: precision.clamp01(),
        recall: recall.clamp01(),
        f1,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AlignToken<'a, F> {
    pub lemma: &'a str,
    pub vector: &'a [F],
}

pub const ALIGNMENT_MIN_SCORE: f64 = 0.5;

/// Greedy one-to-one alignment: repeatedly takes the best-scoring free pair
/// (1 for equal lemmas, else clamped cosine), ignoring pairs below 0.5.
/// Returns the fraction of reference tokens aligned.
pub fn word_alignment_coverage<F: Scalar>(cand: &[AlignToken<'_, F>], reference: &[AlignToken<'_, F>]) -> F {
    if reference.is_empty() {
        return F::zero();
    }
    let min = F::lit(ALIGNMENT_MIN_SCORE);
    let mut pairs: Vec<(F, usize, usize)> = Vec::new();
    for (j, r) in reference.iter().enumerate() {
        for (i, c) in cand.iter().enumerate() {
            let score = if c.lemma == r.lemma {
                F::one()
            } else {
                clamped_cosine(c.vector, r.vector)
            };
            if score >= min {
                pairs.push((score, j, i));
            }
        }
    }
    // Highest score first; ties by reference then candidate position.
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("scores are finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut ref_used = vec![false; reference.len()];
    let mut cand_used = vec![false; cand.len()];
    let mut aligned = 0;
    for (_, j, i) in pairs {
        if !ref_used[j] && !cand_used[i] {
            ref_used[j] = true;
            cand_used[i] = true;
            aligned += 1;
        }
    }
    F::from_count(aligned) / F::from_count(reference.len())
}
