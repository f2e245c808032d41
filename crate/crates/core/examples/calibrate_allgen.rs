//! Regenerates the window constants in `fixtures/allgen_constants.toml`.
//!
//! For each regime, samples per-vector expected times at n = 1000 and
//! prints the extreme quantiles of `T / lower scale` and `T / upper scale`.
//! The frozen constants were chosen with a factor-2 margin beyond the
//! 0.05% and 99.95% quantiles and rounded outward.

use batchlab::distributions::OverlapDistribution;
use batchlab::ensemble::{sample_expected_times, AllgenRegime};
use batchlab::stats::{quantile_sorted, sort_floats};

fn main() {
    let n = 1000;
    let trials = 20_000;
    for spec in ["powertail:beta=1", "uniform", "powertail:beta=-0.5"] {
        let dist: OverlapDistribution = spec.parse().unwrap();
        let alpha = dist.tail_parameters().unwrap().alpha;
        let regime = AllgenRegime::of_alpha(alpha);
        let (lo, hi) = regime.scales(n, alpha);
        let times = sample_expected_times(&dist, n, trials, 0xa11_6e4);
        let mut low: Vec<f64> = times.iter().map(|t| t / lo).collect();
        let mut high: Vec<f64> = times.iter().map(|t| t / hi).collect();
        sort_floats(&mut low);
        sort_floats(&mut high);
        println!(
            "{spec:>22} {regime:?}: T/lower q0.0005 = {:.4e}, min = {:.4e}; T/upper q0.9995 = {:.4e}, max = {:.4e}",
            quantile_sorted(&low, 0.0005),
            low[0],
            quantile_sorted(&high, 0.9995),
            high[high.len() - 1],
        );
    }
}
