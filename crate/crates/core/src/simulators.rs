//! Monte Carlo simulation of the batch, memoryless and full-memory
//! learners.
//!
//! Times count teacher words. The batch learner's time is the first word
//! after which only the target concept is consistent; the other two report
//! the word at which the student picks the target for good.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{OverlapDistribution, OverlapVector};
use crate::error::{Error, Result};
use crate::stats::{lower_order_statistic, mean_stderr, median};
use crate::streams::{open_unit, tag, trial_rng};

pub const DEFAULT_HORIZON: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Batch,
    Memoryless,
    FullMemory,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Batch, Algorithm::Memoryless, Algorithm::FullMemory];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Batch => "batch",
            Algorithm::Memoryless => "memoryless",
            Algorithm::FullMemory => "full_memory",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Algorithm::Batch => tag::BATCH,
            Algorithm::Memoryless => tag::MEMORYLESS,
            Algorithm::FullMemory => tag::FULL_MEMORY,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::config(format!("unknown algorithm {s:?}")))
    }
}

/// Who the memoryless student may pick after a rejection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepickPolicy {
    /// Uniform over all `n + 1` concepts, the rejected one included.
    #[default]
    AllConcepts,
    /// Uniform over the other `n` concepts.
    ExcludeCurrent,
}

impl FromStr for RepickPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "all_concepts" => Ok(RepickPolicy::AllConcepts),
            "exclude_current" => Ok(RepickPolicy::ExcludeCurrent),
            _ => Err(Error::config(format!("unknown re-pick policy {s:?}"))),
        }
    }
}

impl fmt::Display for RepickPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepickPolicy::AllConcepts => "all_concepts",
            RepickPolicy::ExcludeCurrent => "exclude_current",
        })
    }
}

/// Number of words a wrong concept with overlap `p` survives, counting the
/// word that rejects it: geometric on `{1, 2, …}` with success `1 − p`.
fn survival_words<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p == 0.0 {
        return 1;
    }
    let g = (open_unit(rng).ln() / p.ln()).ceil();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        (g as u64).max(1)
    }
}

/// First word count after which every wrong concept has been excluded.
pub fn simulate_batch<R: Rng + ?Sized>(p: &OverlapVector, rng: &mut R) -> u64 {
    p.iter().map(|x| survival_words(x, rng)).max().unwrap_or(0)
}

/// Word-by-word batch learner: each word's concept list contains concept
/// `i` with probability `pᵢ`, and the student intersects the lists.
pub fn simulate_batch_words<R: Rng + ?Sized>(p: &OverlapVector, rng: &mut R) -> u64 {
    let mut alive: Vec<f64> = p.iter().collect();
    let mut words = 0;
    while !alive.is_empty() {
        words += 1;
        alive.retain(|&x| rng.random::<f64>() < x);
    }
    words
}

/// Memoryless learner. Returns `None` if the target is not picked within
/// `horizon` words.
pub fn simulate_memoryless<R: Rng + ?Sized>(
    p: &OverlapVector,
    rng: &mut R,
    horizon: u64,
    policy: RepickPolicy,
) -> Option<u64> {
    let n = p.len();
    let p = p.as_slice();
    // concept 0 is the target, concept i ≥ 1 has overlap p[i - 1]
    let mut held = rng.random_range(0..=n);
    let mut word = 0u64;
    while held != 0 {
        word = word.saturating_add(survival_words(p[held - 1], rng));
        if word > horizon {
            return None;
        }
        held = match policy {
            RepickPolicy::AllConcepts => rng.random_range(0..=n),
            RepickPolicy::ExcludeCurrent => {
                let j = rng.random_range(0..n);
                if j >= held { j + 1 } else { j }
            }
        };
    }
    Some(word)
}

/// Learner that never returns to a rejected concept.
pub fn simulate_full_memory<R: Rng + ?Sized>(p: &OverlapVector, rng: &mut R) -> u64 {
    let mut remaining: Vec<f64> = p.iter().collect();
    let mut word = 0u64;
    loop {
        let pick = rng.random_range(0..=remaining.len());
        if pick == remaining.len() {
            return word;
        }
        let overlap = remaining.swap_remove(pick);
        word = word.saturating_add(survival_words(overlap, rng));
    }
}

/// Everything needed to reproduce a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub algorithm: Algorithm,
    pub dist: OverlapDistribution,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Use this overlap vector in every trial instead of sampling.
    pub fixed_p: Option<OverlapVector>,
    pub policy: RepickPolicy,
    pub horizon: u64,
}

impl SimulationConfig {
    pub fn new(algorithm: Algorithm, dist: OverlapDistribution, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            algorithm,
            dist,
            n,
            trials,
            seed,
            fixed_p: None,
            policy: RepickPolicy::default(),
            horizon: DEFAULT_HORIZON,
        }
    }
}

/// Per-trial learning times; `None` marks a censored trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatch {
    pub algorithm: Algorithm,
    pub n: usize,
    pub times: Vec<Option<u64>>,
    pub seed: u64,
    /// `None` when every trial used the same fixed overlap vector.
    pub dist: Option<OverlapDistribution>,
    pub resample_p: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub censored: usize,
    /// Mean and standard error over settled trials.
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
}

impl TrialBatch {
    pub fn censored(&self) -> usize {
        self.times.iter().filter(|t| t.is_none()).count()
    }

    pub fn settled(&self) -> Vec<f64> {
        self.times.iter().flatten().map(|&t| t as f64).collect()
    }

    pub fn summary(&self) -> TrialSummary {
        let settled = self.settled();
        let est = mean_stderr(&settled);
        TrialSummary {
            trials: self.times.len(),
            censored: self.censored(),
            mean: est.mean,
            stderr: est.stderr,
            median: median(&settled),
        }
    }

    /// Smallest `k` with at least a `1 − delta` fraction of trials done by
    /// `k` words. Censored trials count as never done.
    pub fn n_delta(&self, delta: f64) -> Result<u64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        let censored = self.censored();
        let limit = (0.5 * delta * self.times.len() as f64).floor() as usize;
        if censored > limit {
            return Err(Error::Censoring { censored, trials: self.times.len(), limit });
        }
        // None sorts after every Some once mapped to u64::MAX
        let mut sorted: Vec<u64> = self.times.iter().map(|t| t.unwrap_or(u64::MAX)).collect();
        sorted.sort_unstable();
        lower_order_statistic(&sorted, 1.0 - delta).ok_or_else(|| Error::domain("no trials"))
    }
}

/// Run `config.trials` independent trials.
///
/// Overlap vectors come from the overlap stream and the dynamics from a
/// per-algorithm stream, so different algorithms see the same vectors.
pub fn run_trials(config: &SimulationConfig) -> Result<TrialBatch> {
    if config.trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    if config.horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    if let Some(p) = &config.fixed_p {
        if p.len() != config.n {
            return Err(Error::config(format!("fixed p has {} entries but n = {}", p.len(), config.n)));
        }
    }
    let times = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let p = match &config.fixed_p {
                Some(p) => p.clone(),
                None => config.dist.sample(config.n, &mut trial_rng(config.seed, tag::OVERLAPS, i)),
            };
            let mut rng = trial_rng(config.seed, config.algorithm.stream_tag(), i);
            match config.algorithm {
                Algorithm::Batch => Some(simulate_batch(&p, &mut rng)).filter(|&t| t <= config.horizon),
                Algorithm::Memoryless => simulate_memoryless(&p, &mut rng, config.horizon, config.policy),
                Algorithm::FullMemory => Some(simulate_full_memory(&p, &mut rng)).filter(|&t| t <= config.horizon),
            }
        })
        .collect();
    Ok(TrialBatch {
        algorithm: config.algorithm,
        n: config.n,
        times,
        seed: config.seed,
        dist: config.fixed_p.is_none().then(|| config.dist.clone()),
        resample_p: config.fixed_p.is_none(),
    })
}

/// Empirical `(1 − delta)`-quantile of the learning time over fresh
/// overlap vectors.
pub fn empirical_n_delta(config: &SimulationConfig, delta: f64) -> Result<u64> {
    run_trials(config)?.n_delta(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch_exact::{expected_time_series, survival};

    fn v(p: &[f64]) -> OverlapVector {
        OverlapVector::new(p.to_vec()).unwrap()
    }

    /// Expected absorption time of the memoryless chain started from a
    /// uniform pick, by Gaussian elimination on `(I − Q) t = 1`.
    #[allow(clippy::needless_range_loop)]
    fn memoryless_chain_mean(p: &[f64], policy: RepickPolicy) -> f64 {
        let n = p.len();
        // unknowns t_1..t_n: expected words to settle while holding i
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][i] += 1.0;
            a[i][n] = 1.0;
            let reject = 1.0 - p[i];
            a[i][i] -= p[i];
            for j in 0..n {
                let w = match policy {
                    RepickPolicy::AllConcepts => 1.0 / (n + 1) as f64,
                    RepickPolicy::ExcludeCurrent if j == i => 0.0,
                    RepickPolicy::ExcludeCurrent => 1.0 / n as f64,
                };
                a[i][j] -= reject * w;
            }
        }
        for col in 0..n {
            let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, pivot);
            for row in 0..n {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
        let t: f64 = (0..n).map(|i| a[i][n] / a[i][i]).sum();
        t / (n + 1) as f64
    }

    fn mean_of<F: Fn(u64) -> f64 + Sync + Send>(trials: u64, f: F) -> (f64, f64) {
        let xs: Vec<f64> = (0..trials).into_par_iter().map(f).collect();
        let e = mean_stderr(&xs);
        (e.mean, e.stderr)
    }

    #[test]
    fn batch_examples() {
        let mut rng = trial_rng(1, 0, 0);
        for _ in 0..100 {
            assert_eq!(simulate_batch(&v(&[0.0, 0.0, 0.0]), &mut rng), 1);
        }
        assert_eq!(simulate_batch(&OverlapVector::empty(), &mut rng), 0);
        let (m, se) = mean_of(1_000_000, |i| simulate_batch(&v(&[0.5]), &mut trial_rng(2, 0, i)) as f64);
        assert!((m - 2.0).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn batch_word_level_agrees() {
        let p = v(&[0.3, 0.8, 0.6, 0.0, 0.9]);
        let exact = expected_time_series(&p, 1e-12).unwrap().steps_expectation;
        let (fast, se_fast) = mean_of(200_000, |i| simulate_batch(&p, &mut trial_rng(3, 0, i)) as f64);
        let (slow, se_slow) = mean_of(200_000, |i| simulate_batch_words(&p, &mut trial_rng(3, 1, i)) as f64);
        assert!((fast - exact).abs() < 4.0 * se_fast);
        assert!((slow - exact).abs() < 4.0 * se_slow);
        // distribution, not just mean: P(k₀ > 3) = q_3
        let tail: Vec<f64> =
            (0..200_000).map(|i| (simulate_batch_words(&p, &mut trial_rng(3, 2, i)) > 3) as u8 as f64).collect();
        let q3 = survival(&p, 3);
        let sigma = (q3 * (1.0 - q3) / tail.len() as f64).sqrt();
        assert!((mean_stderr(&tail).mean - q3).abs() < 4.0 * sigma);
    }

    #[test]
    fn memoryless_trivial_cases() {
        let mut rng = trial_rng(4, 0, 0);
        assert_eq!(simulate_memoryless(&OverlapVector::empty(), &mut rng, 10, RepickPolicy::AllConcepts), Some(0));
        assert_eq!(simulate_full_memory(&OverlapVector::empty(), &mut rng), 0);
    }

    #[test]
    fn memoryless_two_state_distribution() {
        // p₁ = 0: P(settled by k) = 1 − 2^{−(k+1)}
        let trials = 200_000u64;
        let times: Vec<u64> = (0..trials)
            .map(|i| simulate_memoryless(&v(&[0.0]), &mut trial_rng(5, 0, i), 1000, RepickPolicy::AllConcepts).unwrap())
            .collect();
        for k in 0..6u64 {
            let frac = times.iter().filter(|&&t| t <= k).count() as f64 / trials as f64;
            let exact = 1.0 - 0.5f64.powi(k as i32 + 1);
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
            assert!((frac - exact).abs() <= 4.0 * sigma + 1e-12, "k={k}: {frac} vs {exact}");
        }
    }

    #[test]
    fn memoryless_matches_chain_solve() {
        for (p, policy) in [
            (vec![0.9], RepickPolicy::AllConcepts),
            (vec![0.5, 0.95, 0.2], RepickPolicy::AllConcepts),
            (vec![0.5, 0.95, 0.2], RepickPolicy::ExcludeCurrent),
        ] {
            let exact = memoryless_chain_mean(&p, policy);
            let pv = v(&p);
            let (m, se) = mean_of(100_000, |i| {
                simulate_memoryless(&pv, &mut trial_rng(6, 0, i), u64::MAX, policy).unwrap() as f64
            });
            assert!((m - exact).abs() < 3.0 * se, "{p:?} {policy}: {m} ± {se} vs {exact}");
        }
        // all-concepts re-picks: mean settle time is Σ 1/(1 − pᵢ)
        let p = [0.5, 0.95, 0.2];
        let closed: f64 = p.iter().map(|x| 1.0 / (1.0 - x)).sum();
        assert!((memoryless_chain_mean(&p, RepickPolicy::AllConcepts) - closed).abs() < 1e-12);
    }

    #[test]
    fn full_memory_single_concept() {
        // pick R₀ first (time 0) or R₁ then R₀ after Geom(1 − p) words
        for p in [0.0, 0.7] {
            let exact = 0.5 / (1.0 - p);
            let pv = v(&[p]);
            let (m, se) = mean_of(100_000, |i| simulate_full_memory(&pv, &mut trial_rng(7, 0, i)) as f64);
            assert!((m - exact).abs() < 3.0 * se, "p={p}: {m} vs {exact}");
        }
    }

    #[test]
    fn full_memory_dominated_by_memoryless() {
        let p = v(&[0.3, 0.6, 0.9, 0.1, 0.75]);
        let (full, _) = mean_of(100_000, |i| simulate_full_memory(&p, &mut trial_rng(8, 0, i)) as f64);
        let (mem, _) = mean_of(100_000, |i| {
            simulate_memoryless(&p, &mut trial_rng(8, 0, i), u64::MAX, RepickPolicy::AllConcepts).unwrap() as f64
        });
        assert!(full <= mem, "{full} > {mem}");
    }

    #[test]
    fn censoring_is_reported() {
        let mut cfg = SimulationConfig::new(Algorithm::Memoryless, OverlapDistribution::uniform(), 50, 200, 9);
        cfg.fixed_p = Some(v(&[0.999; 50]));
        cfg.horizon = 10;
        let batch = run_trials(&cfg).unwrap();
        assert!(batch.censored() > 0);
        assert!(matches!(batch.n_delta(0.1), Err(Error::Censoring { .. })));
    }

    #[test]
    fn horizon_monotonicity() {
        let mut cfg = SimulationConfig::new(Algorithm::Memoryless, OverlapDistribution::uniform(), 30, 500, 10);
        let mut last = 0;
        for h in [1u64, 10, 100, 1000, 10_000] {
            cfg.horizon = h;
            let settled = run_trials(&cfg).unwrap().times.iter().flatten().count();
            assert!(settled >= last);
            last = settled;
        }
    }

    #[test]
    fn n_delta_order_statistic() {
        let batch = TrialBatch {
            algorithm: Algorithm::Batch,
            n: 1,
            times: (1..=10).map(Some).collect(),
            seed: 0,
            dist: None,
            resample_p: false,
        };
        assert_eq!(batch.n_delta(0.1).unwrap(), 9);
        assert_eq!(batch.n_delta(0.05).unwrap(), 10);
        assert_eq!(batch.n_delta(1.0 - 1e-9).unwrap(), 1);
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("exclude-current".parse::<RepickPolicy>().unwrap(), RepickPolicy::ExcludeCurrent);
    }
}
