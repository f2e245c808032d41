//! Empirical N_Δ of the three learners side by side.

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output::{fmt_float, Csv};
use crate::distributions::OverlapDistribution;
use crate::error::Result;
use crate::simulators::{run_trials, Algorithm, SimulationConfig};
use crate::stats::ols;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: usize,
    pub algorithm: Algorithm,
    pub n_delta: u64,
    pub censored: usize,
    pub mean_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub dist: OverlapDistribution,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
    /// Log-log slope of N_Δ against `n` per algorithm, when the sweep has
    /// at least two sizes.
    pub exponents: Vec<(Algorithm, f64)>,
    /// Sizes where the batch learner needed more words than the memoryless
    /// one although `β ≥ 0`.
    pub violations: Vec<String>,
}

impl ComparisonTable {
    pub fn get(&self, n: usize, algorithm: Algorithm) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.n == n && r.algorithm == algorithm)
    }

    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["n", "algorithm", "n_delta", "censored", "mean_time"]);
        for r in &self.rows {
            csv.push(vec![
                r.n.to_string(),
                r.algorithm.to_string(),
                r.n_delta.to_string(),
                r.censored.to_string(),
                fmt_float(r.mean_time),
            ]);
        }
        csv.render()
    }
}

/// Run all three learners on the same overlap vectors.
///
/// Every algorithm draws its vectors from the shared overlap stream of the
/// master seed and its dynamics from its own stream.
pub fn compare_algorithms(config: &RunConfig) -> Result<ComparisonTable> {
    config.validate()?;
    let dist = config.require_dist()?.clone();
    let sizes = config.sizes();
    let mut rows = Vec::new();
    for &n in &sizes {
        for algorithm in Algorithm::ALL {
            let mut sim = SimulationConfig::new(algorithm, dist.clone(), n, config.trials, config.seed);
            sim.policy = config.policy;
            sim.horizon = config.horizon;
            let batch = run_trials(&sim)?;
            rows.push(ComparisonRow {
                n,
                algorithm,
                n_delta: batch.n_delta(config.delta)?,
                censored: batch.censored(),
                mean_time: batch.summary().mean,
            });
        }
    }

    let mut exponents = Vec::new();
    let positive: Vec<usize> = sizes.iter().copied().filter(|&n| n > 0).collect();
    if positive.len() >= 2 {
        for algorithm in Algorithm::ALL {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.algorithm == algorithm && r.n > 0)
                .map(|r| ((r.n as f64).ln(), (r.n_delta.max(1) as f64).ln()))
                .unzip();
            exponents.push((algorithm, ols(&xs, &ys).slope));
        }
    }

    let beta_nonnegative = dist.tail_parameters().map(|t| t.alpha >= 1.0).unwrap_or(true);
    let mut violations = Vec::new();
    if beta_nonnegative {
        for &n in &sizes {
            let b = rows.iter().find(|r| r.n == n && r.algorithm == Algorithm::Batch);
            let m = rows.iter().find(|r| r.n == n && r.algorithm == Algorithm::Memoryless);
            if let (Some(b), Some(m)) = (b, m) {
                if b.n_delta > m.n_delta {
                    violations.push(format!(
                        "n = {n}: batch N_delta {} exceeds memoryless N_delta {}",
                        b.n_delta, m.n_delta
                    ));
                }
            }
        }
    }

    Ok(ComparisonTable { dist, delta: config.delta, trials: config.trials, seed: config.seed, rows, exponents, violations })
}
