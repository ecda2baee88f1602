use std::path::Path;

use serde::{Deserialize, Serialize};

use super::functions::registry;
use crate::jsonl::{self, FORMAT_VERSION};
use crate::{float9, Error, Result, Scalar};

/// A labeling-function output on one token: a score in `[0, 1]`, or
/// `None` for abstain.
pub type Vote<F> = Option<F>;

/// J functions × T tokens grid of votes for one answer.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMatrix<F> {
    pub answer_id: String,
    pub function_ids: Vec<String>,
    /// Whether function `j` is a soft matcher.
    pub soft: Vec<bool>,
    num_tokens: usize,
    votes: Vec<Vote<F>>,
}

impl<F: Scalar> VoteMatrix<F> {
    pub fn new(answer_id: impl Into<String>, function_ids: Vec<String>, soft: Vec<bool>, num_tokens: usize) -> Self {
        assert_eq!(function_ids.len(), soft.len(), "one soft flag per function");
        let j = function_ids.len();
        VoteMatrix {
            answer_id: answer_id.into(),
            function_ids,
            soft,
            num_tokens,
            votes: vec![None; j * num_tokens],
        }
    }

    /// Builds a matrix from rows of votes, treating every function as soft.
    pub fn from_rows(answer_id: impl Into<String>, rows: Vec<Vec<Vote<F>>>) -> Self {
        let t = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|j| format!("lf{j}")).collect();
        let mut m = Self::new(answer_id, ids, vec![true; rows.len()], t);
        for (j, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), t, "ragged vote rows");
            for (i, v) in row.into_iter().enumerate() {
                m.set(j, i, v);
            }
        }
        m
    }

    pub fn num_functions(&self) -> usize {
        self.function_ids.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    pub fn get(&self, j: usize, t: usize) -> Vote<F> {
        self.votes[j * self.num_tokens + t]
    }

    pub fn set(&mut self, j: usize, t: usize, v: Vote<F>) {
        debug_assert!(v.is_none_or(|x| x >= F::zero() && x <= F::one()));
        self.votes[j * self.num_tokens + t] = v;
    }

    /// Records `v`, keeping an existing larger vote.
    pub fn vote_max(&mut self, j: usize, t: usize, v: F) {
        let slot = &mut self.votes[j * self.num_tokens + t];
        *slot = Some(match *slot {
            Some(old) if old >= v => old,
            _ => v,
        });
    }

    /// Votes on token `t`, one per function.
    pub fn column(&self, t: usize) -> impl Iterator<Item = Vote<F>> + '_ {
        (0..self.num_functions()).map(move |j| self.get(j, t))
    }

    pub fn is_all_abstain(&self) -> bool {
        self.votes.iter().all(Option::is_none)
    }

    pub fn to_record(&self) -> VoteRecord {
        let mut votes = Vec::new();
        for j in 0..self.num_functions() {
            for t in 0..self.num_tokens {
                if let Some(v) = self.get(j, t) {
                    votes.push((j, t, float9::round9(v.as_f64())));
                }
            }
        }
        VoteRecord {
            format_version: FORMAT_VERSION.to_string(),
            answer_id: self.answer_id.clone(),
            function_ids: self.function_ids.clone(),
            num_tokens: self.num_tokens,
            votes,
        }
    }

    pub fn from_record(rec: VoteRecord) -> Result<Self> {
        let reg = registry();
        let soft = rec
            .function_ids
            .iter()
            .map(|id| {
                reg.iter()
                    .find(|f| f.id == id)
                    .map(|f| f.is_soft())
                    .ok_or_else(|| Error::Validation(format!("unknown labeling function {id:?}")))
            })
            .collect::<Result<Vec<bool>>>()?;
        let mut m = Self::new(rec.answer_id, rec.function_ids, soft, rec.num_tokens);
        for (j, t, v) in rec.votes {
            if j >= m.num_functions() || t >= m.num_tokens || !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "vote ({j}, {t}, {v}) outside a {}x{} matrix",
                    m.num_functions(),
                    m.num_tokens
                )));
            }
            m.set(j, t, Some(F::lit(v)));
        }
        Ok(m)
    }
}

/// Sparse on-disk form of a [`VoteMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub format_version: String,
    pub answer_id: String,
    pub function_ids: Vec<String>,
    pub num_tokens: usize,
    /// `(function, token, value)` for every non-abstain vote.
    pub votes: Vec<(usize, usize, f64)>,
}

pub fn write_vote_matrices<F: Scalar>(matrices: &[VoteMatrix<F>], path: &Path) -> Result<()> {
    jsonl::write_atomic(path, jsonl::to_lines(matrices.iter().map(VoteMatrix::to_record))?.as_bytes())
}

pub fn load_vote_matrices<F: Scalar>(path: &Path) -> Result<Vec<VoteMatrix<F>>> {
    jsonl::read_records::<VoteRecord>(path)?
        .into_iter()
        .map(|(_, r)| {
            jsonl::check_version(path, &r.format_version)?;
            VoteMatrix::from_record(r)
        })
        .collect()
}

/// Per-token cue probabilities for one answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SilverLabels<F> {
    pub answer_id: String,
    #[serde(with = "float9::vec")]
    pub probs: Vec<F>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct SilverRecord<F> {
    format_version: String,
    #[serde(flatten)]
    labels: SilverLabels<F>,
}

pub fn write_silver_labels<F: Scalar>(labels: &[SilverLabels<F>], path: &Path) -> Result<()> {
    let lines = jsonl::to_lines(labels.iter().map(|l| SilverRecord {
        format_version: FORMAT_VERSION.to_string(),
        labels: l.clone(),
    }))?;
    jsonl::write_atomic(path, lines.as_bytes())
}

pub fn load_silver_labels<F: Scalar>(path: &Path) -> Result<Vec<SilverLabels<F>>> {
    jsonl::read_records::<SilverRecord<F>>(path)?
        .into_iter()
        .map(|(line, r)| {
            jsonl::check_version(path, &r.format_version)?;
            if let Some(p) = r.labels.probs.iter().find(|p| !(**p >= F::zero() && **p <= F::one())) {
                return Err(Error::Validation(format!(
                    "{}:{line}: probability {p} outside [0,1]",
                    path.display()
                )));
            }
            Ok(r.labels)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_max_keeps_larger() {
        let mut m: VoteMatrix<f64> = VoteMatrix::new("a", vec!["x".into()], vec![true], 2);
        m.vote_max(0, 0, 0.6);
        m.vote_max(0, 0, 0.8);
        m.vote_max(0, 0, 0.7);
        assert_eq!(m.get(0, 0), Some(0.8));
        assert_eq!(m.get(0, 1), None);
    }

    #[test]
    fn record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("votes.jsonl");
        let ids = vec!["lemma_match".to_string(), "bleu".to_string()];
        let mut m: VoteMatrix<f64> = VoteMatrix::new("a1", ids, vec![false, true], 3);
        m.set(0, 1, Some(1.0));
        m.set(1, 2, Some(0.625));
        write_vote_matrices(&[m.clone()], &p).unwrap();
        assert_eq!(load_vote_matrices::<f64>(&p).unwrap(), vec![m]);
    }

    #[test]
    fn unknown_function_rejected() {
        let rec = VoteRecord {
            format_version: "1".into(),
            answer_id: "a".into(),
            function_ids: vec!["nope".into()],
            num_tokens: 1,
            votes: vec![],
        };
        assert!(VoteMatrix::<f64>::from_record(rec).is_err());
    }

    #[test]
    fn silver_labels_round_trip_and_range_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("silver.jsonl");
        let labels = vec![SilverLabels {
            answer_id: "a".into(),
            probs: vec![0.0, 0.25, 1.0],
        }];
        write_silver_labels(&labels, &p).unwrap();
        assert_eq!(load_silver_labels::<f64>(&p).unwrap(), labels);
        std::fs::write(&p, "{\"format_version\":\"1\",\"answer_id\":\"a\",\"probs\":[1.5]}\n").unwrap();
        assert!(load_silver_labels::<f64>(&p).is_err());
        std::fs::write(&p, "{\"format_version\":\"2\",\"answer_id\":\"a\",\"probs\":[]}\n").unwrap();
        assert!(matches!(load_silver_labels::<f64>(&p), Err(Error::FormatVersion { .. })));
    }
}
