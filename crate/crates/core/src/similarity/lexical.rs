//! Surface-overlap measures over token key sequences.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use crate::Scalar;

fn ngram_counts<T: Eq + Hash>(seq: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if n == 0 || seq.len() < n {
        return m;
    }
    for w in seq.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Size of the clipped multiset intersection of the n-grams of `a` and `b`.
fn clipped_matches<T: Eq + Hash>(a: &[T], b: &[T], n: usize) -> usize {
    let ca = ngram_counts(a, n);
    let cb = ngram_counts(b, n);
    ca.iter().map(|(g, &k)| k.min(cb.get(g).copied().unwrap_or(0))).sum()
}

fn ngram_total(len: usize, n: usize) -> usize {
    if n == 0 || len < n {
        0
    } else {
        len - n + 1
    }
}

/// Fraction of candidate n-grams also present in the reference (clipped).
pub fn ngram_overlap<F: Scalar, T: Eq + Hash>(cand: &[T], reference: &[T], n: usize) -> F {
    let total = ngram_total(cand.len(), n);
    if total == 0 {
        return F::zero();
    }
    F::from_count(clipped_matches(cand, reference, n)) / F::from_count(total)
}

/// ROUGE-N, recall form.
pub fn rouge_n<F: Scalar, T: Eq + Hash>(cand: &[T], reference: &[T], n: usize) -> F {
    let total = ngram_total(reference.len(), n);
    if total == 0 {
        return F::zero();
    }
    F::from_count(clipped_matches(cand, reference, n)) / F::from_count(total)
}

pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 over the longest common subsequence.
pub fn rouge_l<F: Scalar, T: Eq>(cand: &[T], reference: &[T]) -> F {
    let l = lcs_len(cand, reference);
    if l == 0 {
        return F::zero();
    }
    let l = F::from_count(l);
    let p = l / F::from_count(cand.len());
    let r = l / F::from_count(reference.len());
    (F::lit(2.0) * p * r / (p + r)).clamp01()
}

/// Smoothed sentence BLEU: add-one on every n-gram precision, brevity
/// penalty when the candidate is shorter than the reference.
pub fn bleu<F: Scalar, T: Eq + Hash>(cand: &[T], reference: &[T], max_n: usize) -> F {
    if cand.is_empty() || max_n == 0 {
        return F::zero();
    }
    let orders = max_n.min(cand.len());
    let mut log_sum = F::zero();
    for n in 1..=orders {
        let matched = F::from_count(clipped_matches(cand, reference, n));
        let total = F::from_count(ngram_total(cand.len(), n));
        log_sum = log_sum + ((matched + F::one()) / (total + F::one())).ln();
    }
    let geo = (log_sum / F::from_count(orders)).exp();
    let bp = if cand.len() < reference.len() {
        (F::one() - F::from_count(reference.len()) / F::from_count(cand.len())).exp()
    } else {
        F::one()
    };
    (geo * bp).clamp01()
}

/// Set Jaccard; two empty sequences count as identical.
pub fn jaccard<F: Scalar, T: Eq + Hash>(cand: &[T], reference: &[T]) -> F {
    let a: HashSet<&T> = cand.iter().collect();
    let b: HashSet<&T> = reference.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return F::one();
    }
    F::from_count(a.intersection(&b).count()) / F::from_count(union)
}

/// Token-level Levenshtein distance with unit costs.
pub fn levenshtein<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)`; two empty sequences score 1.
pub fn edit_similarity<F: Scalar, T: Eq>(cand: &[T], reference: &[T]) -> F {
    let longest = cand.len().max(reference.len());
    if longest == 0 {
        return F::one();
    }
    F::one() - F::from_count(levenshtein(cand, reference)) / F::from_count(longest)
}
