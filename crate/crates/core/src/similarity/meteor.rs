//! METEOR without synonym tables: exact then stem unigram alignment.

use crate::Scalar;

pub const ALPHA: f64 = 0.9;
pub const BETA: f64 = 3.0;
pub const GAMMA: f64 = 0.5;

/// A token seen by the aligner as `(surface, stem)`.
pub type MeteorToken<S> = (S, S);

fn align_stage<S: AsRef<str>>(
    cand: &[MeteorToken<S>],
    reference: &[MeteorToken<S>],
    key: fn(&MeteorToken<S>) -> &str,
    cand_to_ref: &mut [Option<usize>],
    ref_used: &mut [bool],
) {
    for ci in 0..cand.len() {
        if cand_to_ref[ci].is_some() {
            continue;
        }
        let k = key(&cand[ci]);
        let free = |rj: usize| !ref_used[rj] && key(&reference[rj]) == k;
        // Prefer extending the chunk of the previous candidate token.
        let continuing = ci
            .checked_sub(1)
            .and_then(|p| cand_to_ref[p])
            .map(|r| r + 1)
            .filter(|&r| r < reference.len() && free(r));
        let choice = continuing.or_else(|| (0..reference.len()).find(|&rj| free(rj)));
        if let Some(rj) = choice {
            cand_to_ref[ci] = Some(rj);
            ref_used[rj] = true;
        }
    }
}

/// Returns `(matches, chunks)` of the greedy alignment.
pub fn meteor_alignment<S: AsRef<str>>(
    cand: &[MeteorToken<S>],
    reference: &[MeteorToken<S>],
) -> (usize, usize) {
    let mut cand_to_ref = vec![None; cand.len()];
    let mut ref_used = vec![false; reference.len()];
    align_stage(cand, reference, |t| t.0.as_ref(), &mut cand_to_ref, &mut ref_used);
    align_stage(cand, reference, |t| t.1.as_ref(), &mut cand_to_ref, &mut ref_used);
    let pairs: Vec<(usize, usize)> = cand_to_ref
        .iter()
        .enumerate()
        .filter_map(|(c, r)| r.map(|r| (c, r)))
        .collect();
    if pairs.is_empty() {
        return (0, 0);
    }
    let chunks = 1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    (pairs.len(), chunks)
}

pub fn meteor_lite<F: Scalar, S: AsRef<str>>(
    cand: &[MeteorToken<S>],
    reference: &[MeteorToken<S>],
) -> F {
    let (m, chunks) = meteor_alignment(cand, reference);
    if m == 0 {
        return F::zero();
    }
    let mf = F::from_count(m);
    let p = mf / F::from_count(cand.len());
    let r = mf / F::from_count(reference.len());
    let alpha = F::lit(ALPHA);
    let fmean = p * r / (alpha * p + (F::one() - alpha) * r);
    let penalty = F::lit(GAMMA) * (F::from_count(chunks) / mf).powf(F::lit(BETA));
    (fmean * (F::one() - penalty)).clamp01()
}
