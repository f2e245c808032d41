//! Small descriptive-statistics toolkit used by the Monte Carlo code.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Sample mean and standard error, accumulated in the given order.
pub fn mean_stderr(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate { mean: f64::NAN, stderr: f64::NAN, count: 0 };
    }
    let mean = crate::special::compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return MeanEstimate { mean, stderr: f64::INFINITY, count: 1 };
    }
    let ss = crate::special::compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    let var = ss / (n - 1) as f64;
    MeanEstimate { mean, stderr: (var / n as f64).sqrt(), count: n }
}

pub fn sort_floats(xs: &mut [f64]) {
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
}

/// Linear-interpolated quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    sort_floats(&mut v);
    quantile_sorted(&v, 0.5)
}

/// Smallest order statistic `x` with empirical CDF(x) ≥ `level`.
pub fn lower_order_statistic<T: Copy + Ord>(sorted: &[T], level: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    sort_floats(&mut xs);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// Dvoretzky–Kiefer–Wolfowitz band half-width at the given confidence.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

/// Winsorized mean: values above the `1 - upper_fraction` quantile are
/// clamped to it.
pub fn winsorized_mean(xs: &[f64], upper_fraction: f64) -> f64 {
    let mut v = xs.to_vec();
    sort_floats(&mut v);
    let cap = quantile_sorted(&v, 1.0 - upper_fraction);
    crate::special::compensated_sum(xs.iter().map(|x| x.min(cap))) / xs.len() as f64
}

/// Mean after dropping `fraction` of the sample from each end.
pub fn trimmed_mean(xs: &[f64], fraction: f64) -> f64 {
    let mut v = xs.to_vec();
    sort_floats(&mut v);
    let k = (fraction * v.len() as f64).floor() as usize;
    let kept = &v[k..v.len() - k];
    crate::special::compensated_sum(kept.iter().copied()) / kept.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual.
    pub rmse: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    LineFit { slope, intercept, rmse: (rss / n).sqrt() }
}
