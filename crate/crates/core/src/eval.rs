//! Grading and tagging metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cue::TaskMetrics;
use crate::{float9, Error, Result, Scalar};

fn check_pair<F>(a: &[F], b: &[F]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Empty("metric needs at least one value"));
    }
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

pub fn rmse<F: Scalar>(pred: &[F], gold: &[F]) -> Result<F> {
    check_pair(pred, gold)?;
    let sq: F = pred.iter().zip(gold).map(|(&p, &g)| (p - g) * (p - g)).sum();
    Ok((sq / F::from_count(pred.len())).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Prf<F> {
    #[serde(with = "float9")]
    pub precision: F,
    #[serde(with = "float9")]
    pub recall: F,
    #[serde(with = "float9")]
    pub f1: F,
}

fn ratio<F: Scalar>(num: usize, den: usize) -> F {
    if den == 0 {
        F::zero()
    } else {
        F::from_count(num) / F::from_count(den)
    }
}

fn f1<F: Scalar>(p: F, r: F) -> F {
    if p + r > F::zero() {
        F::lit(2.0) * p * r / (p + r)
    } else {
        F::zero()
    }
}

/// Per-class precision, recall and F1 from parallel class labels.
fn class_prf<F: Scalar>(pred: &[usize], gold: &[usize], class: usize) -> (Prf<F>, usize) {
    let tp = pred.iter().zip(gold).filter(|(&p, &g)| p == class && g == class).count();
    let predicted = pred.iter().filter(|&&p| p == class).count();
    let support = gold.iter().filter(|&&g| g == class).count();
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, support);
    (
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        },
        support,
    )
}

/// Macro P/R/F1 over the cue and non-cue token classes, both sides
/// binarized with `> threshold`.
pub fn token_macro_prf<F: Scalar>(probs: &[F], silver: &[F], threshold: F) -> Result<Prf<F>> {
    check_pair(probs, silver)?;
    let bin = |xs: &[F]| xs.iter().map(|&x| usize::from(x > threshold)).collect::<Vec<_>>();
    let (pred, gold) = (bin(probs), bin(silver));
    let (a, _) = class_prf::<F>(&pred, &gold, 0);
    let (b, _) = class_prf::<F>(&pred, &gold, 1);
    let two = F::lit(2.0);
    Ok(Prf {
        precision: (a.precision + b.precision) / two,
        recall: (a.recall + b.recall) / two,
        f1: (a.f1 + b.f1) / two,
    })
}

pub const NUM_GRADE_CLASSES: usize = 9;

/// Nearest point of the 0.125 grid as a class index 0..=8; ties round up.
pub fn nine_class<F: Scalar>(x: F) -> usize {
    let k = (x * F::lit(8.0) + F::lit(0.5)).floor();
    k.max(F::zero()).min(F::lit(8.0)).to_usize().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct NineClassReport<F> {
    #[serde(with = "float9")]
    pub accuracy: F,
    #[serde(with = "float9")]
    pub macro_f1: F,
    #[serde(with = "float9")]
    pub weighted_f1: F,
}

/// Accuracy, macro-F1 over all nine classes (absent classes count as 0)
/// and support-weighted F1.
pub fn nine_class_report<F: Scalar>(pred: &[F], gold: &[F]) -> Result<NineClassReport<F>> {
    check_pair(pred, gold)?;
    let p: Vec<usize> = pred.iter().map(|&x| nine_class(x)).collect();
    let g: Vec<usize> = gold.iter().map(|&x| nine_class(x)).collect();
    let correct = p.iter().zip(&g).filter(|(a, b)| a == b).count();
    let mut macro_sum = F::zero();
    let mut weighted = F::zero();
    for c in 0..NUM_GRADE_CLASSES {
        let (prf, support) = class_prf::<F>(&p, &g, c);
        macro_sum = macro_sum + prf.f1;
        weighted = weighted + prf.f1 * F::from_count(support);
    }
    Ok(NineClassReport {
        accuracy: ratio(correct, p.len()),
        macro_f1: macro_sum / F::from_count(NUM_GRADE_CLASSES),
        weighted_f1: weighted / F::from_count(g.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradeClass {
    Correct,
    Partial,
    Incorrect,
}

impl GradeClass {
    pub fn of<F: Scalar>(score: F) -> Self {
        if score == F::one() {
            GradeClass::Correct
        } else if score == F::zero() {
            GradeClass::Incorrect
        } else {
            GradeClass::Partial
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GroupMeans<F> {
    pub answers: usize,
    #[serde(with = "float9")]
    pub num_cues: F,
    #[serde(with = "float9")]
    pub avg_tokens_per_cue: F,
    #[serde(with = "float9")]
    pub pct_cue_tokens: F,
}

/// Mean task metrics per gold grade class; empty classes are absent.
pub fn class_grouped_task_metrics<F: Scalar>(
    reports: &[TaskMetrics<F>],
    gold: &[F],
) -> Result<BTreeMap<GradeClass, GroupMeans<F>>> {
    if reports.len() != gold.len() {
        return Err(Error::Dimension {
            expected: reports.len(),
            found: gold.len(),
        });
    }
    let mut groups: BTreeMap<GradeClass, Vec<&TaskMetrics<F>>> = BTreeMap::new();
    for (m, &g) in reports.iter().zip(gold) {
        groups.entry(GradeClass::of(g)).or_default().push(m);
    }
    Ok(groups
        .into_iter()
        .map(|(class, ms)| {
            let n = F::from_count(ms.len());
            let mean = |f: &dyn Fn(&TaskMetrics<F>) -> F| ms.iter().map(|m| f(m)).sum::<F>() / n;
            (
                class,
                GroupMeans {
                    answers: ms.len(),
                    num_cues: mean(&|m| F::from_count(m.num_cues)),
                    avg_tokens_per_cue: mean(&|m| m.avg_tokens_per_cue),
                    pct_cue_tokens: mean(&|m| m.pct_cue_tokens),
                },
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Correlation<F> {
    #[serde(with = "float9")]
    pub r: F,
    #[serde(with = "float9")]
    pub p_value: F,
}

/// Sample Pearson r with a two-sided p-value from Student's t with
/// `n − 2` degrees of freedom.
pub fn pearson<F: Scalar>(x: &[F], y: &[F]) -> Result<Correlation<F>> {
    check_pair(x, y)?;
    if x.len() < 3 {
        return Err(Error::Validation(format!("pearson needs at least 3 points, got {}", x.len())));
    }
    let n = F::from_count(x.len());
    let mx = x.iter().copied().sum::<F>() / n;
    let my = y.iter().copied().sum::<F>() / n;
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
        syy = syy + (b - my) * (b - my);
    }
    if sxx == F::zero() || syy == F::zero() {
        return Err(Error::UndefinedCorrelation("constant series"));
    }
    let r = (sxy / (sxx * syy).sqrt()).max(-F::one()).min(F::one());
    let df = (x.len() - 2) as f64;
    let rf = r.as_f64();
    let p = if rf.abs() >= 1.0 {
        0.0
    } else {
        // P(|T| > t) = I_{df / (df + t²)}(df / 2, 1 / 2), and df / (df + t²) = 1 − r²
        statrs::function::beta::beta_reg(df / 2.0, 0.5, 1.0 - rf * rf)
    };
    Ok(Correlation {
        r,
        p_value: F::lit(p.clamp(0.0, 1.0)),
    })
}
