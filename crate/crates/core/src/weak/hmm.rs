//! Two-state (O / CUE) HMM over labeling-function votes, fitted with EM.
//!
//! Each non-abstaining function j contributes a Bernoulli factor
//! `θ[j][s]^v · (1 − θ[j][s])^(1 − v)` to the emission of a token in state
//! `s`; fractional votes act as soft counts. All estimates carry add-one
//! smoothing, so the quantity EM climbs is the data log-likelihood plus the
//! log of the matching Dirichlet(2) / Beta(2, 2) priors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_simple, AggregationMethod};
use super::votes::{SilverLabels, VoteMatrix};
use crate::{log_sum_exp, Error, Result, Scalar};

pub const O: usize = 0;
pub const CUE: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmParams<F> {
    pub initial: [F; 2],
    /// Row-stochastic, `transition[from][to]`.
    pub transition: [[F; 2]; 2],
    /// `emission[j][s]`: firing probability of function `j` in state `s`.
    pub emission: Vec<[F; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmmConfig {
    pub iterations: usize,
    /// `average_all` above this marks a token CUE in the initial labeling.
    pub init_threshold: f64,
    pub floor: f64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig {
            iterations: 4,
            init_threshold: 0.5,
            floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HmmFit<F> {
    pub params: HmmParams<F>,
    /// Penalized log-likelihood before each EM round and after the last.
    pub objective: Vec<F>,
    /// Set when every vote in the corpus abstains; `params` is then the
    /// counting initialization.
    pub all_abstain: bool,
}

impl<F: Scalar> HmmParams<F> {
    pub fn num_functions(&self) -> usize {
        self.emission.len()
    }

    fn log_emissions(&self, m: &VoteMatrix<F>) -> Vec<[F; 2]> {
        let logs: Vec<[[F; 2]; 2]> = self
            .emission
            .iter()
            .map(|th| [[th[0].ln(), (F::one() - th[0]).ln()], [th[1].ln(), (F::one() - th[1]).ln()]])
            .collect();
        (0..m.num_tokens())
            .map(|t| {
                let mut e = [F::zero(); 2];
                for (j, v) in m.column(t).enumerate() {
                    if let Some(v) = v {
                        for s in 0..2 {
                            e[s] = e[s] + v * logs[j][s][0] + (F::one() - v) * logs[j][s][1];
                        }
                    }
                }
                e
            })
            .collect()
    }

    /// Log-density of the parameters under the smoothing priors.
    fn log_prior(&self) -> F {
        let mut lp = self.initial[0].ln() + self.initial[1].ln();
        for row in &self.transition {
            lp = lp + row[0].ln() + row[1].ln();
        }
        for th in &self.emission {
            for &p in th {
                lp = lp + p.ln() + (F::one() - p).ln();
            }
        }
        lp
    }

    fn check(&self, m: &VoteMatrix<F>) -> Result<()> {
        if m.num_functions() != self.num_functions() {
            return Err(Error::Dimension {
                expected: self.num_functions(),
                found: m.num_functions(),
            });
        }
        Ok(())
    }
}

struct ForwardBackward<F> {
    /// `gamma[t][s]`
    gamma: Vec<[F; 2]>,
    /// Summed over t: `xi[a][b]`
    xi: [[F; 2]; 2],
    log_likelihood: F,
}

fn forward_backward<F: Scalar>(params: &HmmParams<F>, m: &VoteMatrix<F>, with_xi: bool) -> ForwardBackward<F> {
    let t_len = m.num_tokens();
    let emit = params.log_emissions(m);
    let log_a = params.transition.map(|row| row.map(F::ln));
    let log_pi = params.initial.map(F::ln);

    let mut alpha = vec![[F::zero(); 2]; t_len];
    for s in 0..2 {
        alpha[0][s] = log_pi[s] + emit[0][s];
    }
    for t in 1..t_len {
        for s in 0..2 {
            alpha[t][s] = emit[t][s] + log_sum_exp(&[alpha[t - 1][0] + log_a[0][s], alpha[t - 1][1] + log_a[1][s]]);
        }
    }
    let mut beta = vec![[F::zero(); 2]; t_len];
    for t in (0..t_len - 1).rev() {
        for s in 0..2 {
            beta[t][s] = log_sum_exp(&[
                log_a[s][0] + emit[t + 1][0] + beta[t + 1][0],
                log_a[s][1] + emit[t + 1][1] + beta[t + 1][1],
            ]);
        }
    }
    let log_z = log_sum_exp(&alpha[t_len - 1]);
    let gamma = (0..t_len)
        .map(|t| {
            let g0 = (alpha[t][0] + beta[t][0] - log_z).exp();
            let g1 = (alpha[t][1] + beta[t][1] - log_z).exp();
            // renormalize away rounding so the two marginals sum to 1
            let z = g0 + g1;
            [g0 / z, g1 / z]
        })
        .collect();
    let mut xi = [[F::zero(); 2]; 2];
    if with_xi {
        for t in 0..t_len - 1 {
            for a in 0..2 {
                for b in 0..2 {
                    xi[a][b] = xi[a][b]
                        + (alpha[t][a] + log_a[a][b] + emit[t + 1][b] + beta[t + 1][b] - log_z).exp();
                }
            }
        }
    }
    ForwardBackward {
        gamma,
        xi,
        log_likelihood: log_z,
    }
}

/// Posterior marginals `[P(O | votes), P(CUE | votes)]` per token.
pub fn posterior_marginals<F: Scalar>(params: &HmmParams<F>, m: &VoteMatrix<F>) -> Result<Vec<[F; 2]>> {
    params.check(m)?;
    if m.num_tokens() == 0 {
        return Ok(Vec::new());
    }
    Ok(forward_backward(params, m, false).gamma)
}

/// Per-token cue probabilities for one answer.
pub fn hmm_posterior<F: Scalar>(params: &HmmParams<F>, m: &VoteMatrix<F>) -> Result<SilverLabels<F>> {
    Ok(SilverLabels {
        answer_id: m.answer_id.clone(),
        probs: posterior_marginals(params, m)?
            .into_iter()
            .map(|g| g[CUE].clamp01())
            .collect(),
    })
}

/// Log-likelihood of one answer's votes, summed over all state paths.
pub fn log_likelihood<F: Scalar>(params: &HmmParams<F>, m: &VoteMatrix<F>) -> Result<F> {
    params.check(m)?;
    if m.num_tokens() == 0 {
        return Ok(F::zero());
    }
    Ok(forward_backward(params, m, false).log_likelihood)
}

/// Expected (or, at initialization, hard) counts.
#[derive(Clone)]
struct Counts<F> {
    initial: [F; 2],
    transition: [[F; 2]; 2],
    /// Σ weight · v
    fire: Vec<[F; 2]>,
    /// Σ weight over non-abstaining tokens
    seen: Vec<[F; 2]>,
    log_likelihood: F,
}

impl<F: Scalar> Counts<F> {
    fn zero(j: usize) -> Self {
        Counts {
            initial: [F::zero(); 2],
            transition: [[F::zero(); 2]; 2],
            fire: vec![[F::zero(); 2]; j],
            seen: vec![[F::zero(); 2]; j],
            log_likelihood: F::zero(),
        }
    }

    fn add_token(&mut self, m: &VoteMatrix<F>, t: usize, weight: [F; 2]) {
        for (j, v) in m.column(t).enumerate() {
            if let Some(v) = v {
                for s in 0..2 {
                    self.fire[j][s] = self.fire[j][s] + weight[s] * v;
                    self.seen[j][s] = self.seen[j][s] + weight[s];
                }
            }
        }
    }

    fn merge(mut self, other: &Counts<F>) -> Self {
        for s in 0..2 {
            self.initial[s] = self.initial[s] + other.initial[s];
            for b in 0..2 {
                self.transition[s][b] = self.transition[s][b] + other.transition[s][b];
            }
        }
        for j in 0..self.fire.len() {
            for s in 0..2 {
                self.fire[j][s] = self.fire[j][s] + other.fire[j][s];
                self.seen[j][s] = self.seen[j][s] + other.seen[j][s];
            }
        }
        self.log_likelihood = self.log_likelihood + other.log_likelihood;
        self
    }

    /// Add-one smoothed estimates, clamped to `[floor, 1 - floor]`.
    fn estimate(&self, floor: F) -> HmmParams<F> {
        let one = F::one();
        let two = F::lit(2.0);
        let clamp = |p: F| p.max(floor).min(one - floor);
        let pair = |a: F, b: F| {
            let p = clamp((a + one) / (a + b + two));
            [p, one - p]
        };
        HmmParams {
            initial: pair(self.initial[0], self.initial[1]),
            transition: [
                pair(self.transition[0][0], self.transition[0][1]),
                pair(self.transition[1][0], self.transition[1][1]),
            ],
            emission: self
                .fire
                .iter()
                .zip(&self.seen)
                .map(|(f, n)| [clamp((f[0] + one) / (n[0] + two)), clamp((f[1] + one) / (n[1] + two))])
                .collect(),
        }
    }
}

fn hard_counts<F: Scalar>(m: &VoteMatrix<F>, threshold: F) -> Counts<F> {
    let labels = aggregate_simple(m, AggregationMethod::AverageAll);
    let states: Vec<usize> = labels.probs.iter().map(|&p| usize::from(p > threshold)).collect();
    let mut c = Counts::zero(m.num_functions());
    c.initial[states[0]] = F::one();
    for w in states.windows(2) {
        c.transition[w[0]][w[1]] = c.transition[w[0]][w[1]] + F::one();
    }
    for (t, &s) in states.iter().enumerate() {
        let mut weight = [F::zero(); 2];
        weight[s] = F::one();
        c.add_token(m, t, weight);
    }
    c
}

fn expected_counts<F: Scalar>(params: &HmmParams<F>, m: &VoteMatrix<F>) -> Counts<F> {
    let fb = forward_backward(params, m, true);
    let mut c = Counts::zero(m.num_functions());
    c.initial = fb.gamma[0];
    c.transition = fb.xi;
    for (t, g) in fb.gamma.iter().enumerate() {
        c.add_token(m, t, *g);
    }
    c.log_likelihood = fb.log_likelihood;
    c
}

/// Sums per-answer counts in corpus order, independent of thread count.
fn reduce<F: Scalar>(j: usize, parts: Vec<Counts<F>>) -> Counts<F> {
    parts.iter().fold(Counts::zero(j), |acc, c| acc.merge(c))
}

/// Fits the HMM: counting initialization from thresholded `average_all`,
/// then `config.iterations` EM rounds.
pub fn hmm_fit<F: Scalar>(matrices: &[VoteMatrix<F>], config: &HmmConfig) -> Result<HmmFit<F>> {
    let first = matrices.first().ok_or(Error::Empty("hmm_fit needs at least one vote matrix"))?;
    let j = first.num_functions();
    if let Some(bad) = matrices.iter().find(|m| m.num_functions() != j) {
        return Err(Error::Dimension {
            expected: j,
            found: bad.num_functions(),
        });
    }
    let data: Vec<&VoteMatrix<F>> = matrices.iter().filter(|m| m.num_tokens() > 0).collect();
    let floor = F::lit(config.floor);
    let init_threshold = F::lit(config.init_threshold);
    let init = reduce(j, data.par_iter().map(|m| hard_counts(m, init_threshold)).collect());
    let mut params = init.estimate(floor);
    if data.iter().all(|m| m.is_all_abstain()) {
        return Ok(HmmFit {
            params,
            objective: Vec::new(),
            all_abstain: true,
        });
    }
    let mut objective = Vec::with_capacity(config.iterations + 1);
    for _ in 0..config.iterations {
        let counts = reduce(j, data.par_iter().map(|m| expected_counts(&params, m)).collect());
        objective.push(counts.log_likelihood + params.log_prior());
        params = counts.estimate(floor);
    }
    let ll = data
        .par_iter()
        .map(|m| forward_backward(&params, m, false).log_likelihood)
        .collect::<Vec<F>>()
        .into_iter()
        .fold(F::zero(), |a, b| a + b);
    objective.push(ll + params.log_prior());
    Ok(HmmFit {
        params,
        objective,
        all_abstain: false,
    })
}
