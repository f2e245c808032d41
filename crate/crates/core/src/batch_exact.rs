//! Exact quantities for a fixed overlap vector under independent concepts.
//!
//! After `k` words concept `i` survives with probability `pᵢ^k`, so the
//! target is learned with probability `l_k = Π(1 − pᵢ^k)` and the survival
//! probability is `q_k = 1 − l_k`. The expected time is
//! `T = Σ_{k≥1} q_k`; the expected number of words until the target is
//! isolated is `E[k₀] = Σ_{k≥0} q_k = T + 1` for `n ≥ 1`.

use serde::{Deserialize, Serialize};

use crate::distributions::OverlapVector;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special::NeumaierSum;

/// Largest vector accepted by the subset enumeration.
pub const MAX_SUBSET_LEN: usize = 25;

const MAX_SERIES_TERMS: u64 = 100_000_000;

/// `p^k`, exact for small integer powers and underflowing gracefully.
pub fn pow_k(p: f64, k: u64) -> f64 {
    if p == 0.0 {
        0.0
    } else if k <= i32::MAX as u64 {
        p.powi(k as i32)
    } else {
        (k as f64 * p.ln()).exp()
    }
}

/// Probability the target is not yet isolated after `k` words.
pub fn survival(p: &OverlapVector, k: u64) -> f64 {
    let mut product = 1.0;
    let mut log_learned = 0.0;
    for x in p.iter() {
        let pk = pow_k(x, k);
        product *= 1.0 - pk;
        log_learned += (-pk).ln_1p();
    }
    let direct = 1.0 - product;
    if direct >= 1e-3 {
        direct
    } else {
        // small survival: avoid the cancellation in 1 − Π
        -log_learned.exp_m1()
    }
}

/// `(maxᵢ pᵢ^k, min(1, Σᵢ pᵢ^k))`, which bracket [`survival`].
pub fn sandwich(p: &OverlapVector, k: u64) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for x in p.iter() {
        let pk = pow_k(x, k);
        max = max.max(pk);
        sum += pk;
    }
    (max, sum.min(1.0))
}

/// Survival probabilities `q_1..=q_K` with a bound on the neglected tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    /// `q[k - 1]` is the survival probability after `k` words.
    pub q: Vec<f64>,
    pub truncation_k: u64,
    /// Upper bound on `Σ_{k > truncation_k} q_k`.
    pub tail_bound: f64,
}

impl SurvivalCurve {
    /// Evaluate until the geometric tail bound `n·p_max^{K+1}/(1 − p_max)`
    /// drops below `eps`.
    pub fn compute(p: &OverlapVector, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::domain(format!("tolerance must be positive, got {eps}")));
        }
        let n = p.len() as f64;
        let pmax = p.max();
        let tail = |k: u64| n * pow_k(pmax, k + 1) / (1.0 - pmax);
        let mut q = Vec::new();
        let mut k = 0u64;
        while tail(k) > eps {
            if k >= MAX_SERIES_TERMS {
                return Err(Error::Precision(format!(
                    "survival series needs more than {MAX_SERIES_TERMS} terms (p_max = {pmax})"
                )));
            }
            k += 1;
            q.push(survival(p, k));
        }
        Ok(Self { q, truncation_k: k, tail_bound: tail(k) })
    }
}

/// Expected learning time of one overlap vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTime {
    /// `T = Σ_{k≥1} q_k`.
    pub t: f64,
    /// `E[k₀] = Σ_{k≥0} q_k`, the mean number of words until learned.
    pub steps_expectation: f64,
    pub error_bound: f64,
    pub terms: u64,
}

impl ExpectedTime {
    fn from_t(t: f64, n: usize, error_bound: f64, terms: u64) -> Self {
        let steps_expectation = if n == 0 { 0.0 } else { t + 1.0 };
        Self { t, steps_expectation, error_bound, terms }
    }
}

/// `T = Σ_{k≥1}(1 − Π(1 − pᵢ^k))` summed directly to within `eps`.
pub fn expected_time_series(p: &OverlapVector, eps: f64) -> Result<ExpectedTime> {
    let curve = SurvivalCurve::compute(p, eps)?;
    let t: NeumaierSum = curve.q.iter().copied().sum();
    Ok(ExpectedTime::from_t(t.sum() + 0.5 * curve.tail_bound, p.len(), 0.5 * curve.tail_bound, curve.truncation_k))
}

/// Inclusion–exclusion over all subsets:
/// `T = Σ_{∅≠s} (−1)^{|s|−1} (1/(1 − p_s) − 1)`, `p_s = Π_{i∈s} pᵢ`.
///
/// Subsets are visited in Gray-code order so each step changes the running
/// product by one factor. Zero overlaps are dropped first: every subset
/// containing one contributes exactly 0.
pub fn expected_time_subsets(p: &OverlapVector) -> Result<f64> {
    if p.len() > MAX_SUBSET_LEN {
        return Err(Error::Size(format!(
            "subset enumeration over {} overlaps (limit {MAX_SUBSET_LEN})",
            p.len()
        )));
    }
    let nonzero: Vec<f64> = p.iter().filter(|&x| x > 0.0).collect();
    let m = nonzero.len();
    let mut sum = NeumaierSum::new();
    let mut members = 0u32; // current subset as a bit mask
    let mut product = 1.0;
    for step in 1u64..(1u64 << m) {
        let j = step.trailing_zeros() as usize;
        members ^= 1 << j;
        if members & (1 << j) != 0 {
            product *= nonzero[j];
        } else {
            product /= nonzero[j];
        }
        if step % 1024 == 0 {
            // resynchronise to stop drift from the chained multiply/divides
            product = (0..m).filter(|&i| members & (1 << i) != 0).map(|i| nonzero[i]).product();
        }
        let term = product / (1.0 - product);
        if members.count_ones() % 2 == 1 {
            sum += term;
        } else {
            sum += -term;
        }
    }
    Ok(sum.sum())
}

/// Smallest `k ≥ 1` with `q_k ≤ delta`.
pub fn n_delta(p: &OverlapVector, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut hi = 1u64;
    while survival(p, hi) > delta {
        hi = hi.checked_mul(2).ok_or_else(|| Error::Precision("N_delta overflowed u64".into()))?;
    }
    let mut lo = hi / 2; // survival(lo) > delta, or lo == 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if survival(p, mid) <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `(Σᵢ 1/(1 − pᵢ), maxᵢ 1/(1 − pᵢ))`: upper and lower bounds on the
/// expected number of words `E[k₀] = T + 1`.
pub fn coarse_bounds(p: &OverlapVector) -> (f64, f64) {
    let mut upper = 0.0;
    let mut lower = 0.0f64;
    for x in p.iter() {
        let g = 1.0 / (1.0 - x);
        upper += g;
        lower = lower.max(g);
    }
    (upper, lower)
}

/// Overlaps preprocessed for repeated evaluation of `q(x)` at real `x`.
///
/// Decay rates `λᵢ = −ln pᵢ` are kept in ascending order so sums can stop
/// as soon as the remaining concepts are negligible.
#[derive(Debug, Clone)]
pub struct SurvivalProfile {
    rates: Vec<f64>,
}

// l(x) below e^{-50} makes q(x) = 1 in double precision
const SATURATED_LOG: f64 = -50.0;
const EULER_MACLAURIN_START: u64 = 64;

impl SurvivalProfile {
    pub fn new(p: &OverlapVector) -> Self {
        let mut rates: Vec<f64> = p.iter().filter(|&x| x > 0.0).map(|x| -x.ln()).collect();
        rates.sort_unstable_by(|a, b| a.total_cmp(b));
        Self { rates }
    }

    /// `(ln l(x), d/dx ln l(x))`.
    fn log_learned(&self, x: f64) -> (f64, f64) {
        let n = self.rates.len();
        let mut log_l = 0.0f64;
        let mut slope = 0.0;
        for (i, &rate) in self.rates.iter().enumerate() {
            let pk = (-rate * x).exp();
            if (n - i) as f64 * pk <= 1e-17 * log_l.abs() || pk == 0.0 {
                break;
            }
            log_l += (-pk).ln_1p();
            slope += rate * pk / (1.0 - pk);
            if log_l < SATURATED_LOG {
                break;
            }
        }
        (log_l, slope)
    }

    /// `q(x) = 1 − Π(1 − pᵢ^x)`.
    pub fn survival(&self, x: f64) -> f64 {
        -self.log_learned(x).0.exp_m1()
    }

    fn survival_and_derivative(&self, x: f64) -> (f64, f64) {
        let (log_l, slope) = self.log_learned(x);
        let l = log_l.exp();
        (-log_l.exp_m1(), -l * slope)
    }

    /// `T = Σ_{k≥1} q_k` to relative accuracy about `rel_tol`.
    ///
    /// The first terms are summed exactly; the smooth remainder is handled
    /// by Euler–Maclaurin, `Σ_{k≥K} q(k) ≈ ∫_K^∞ q + q(K)/2 − q'(K)/12`,
    /// with the integral taken in `ln x` so both the flat `q ≈ 1` stretch
    /// and the decay are resolved.
    pub fn expected_time(&self, rel_tol: f64) -> f64 {
        if self.rates.is_empty() {
            return 0.0;
        }
        let start = EULER_MACLAURIN_START;
        let mut head = NeumaierSum::new();
        for k in 1..start {
            head += self.survival(k as f64);
        }
        let x0 = start as f64;
        let (q0, dq0) = self.survival_and_derivative(x0);
        if q0 == 0.0 {
            return head.sum();
        }
        let mut tail = NeumaierSum::new();
        let mut t = 0.0;
        loop {
            let piece = integrate(
                |u| {
                    let x = x0 * u.exp();
                    self.survival(x) * x
                },
                t,
                t + 1.0,
                1e-300,
                0.1 * rel_tol,
            );
            tail += piece.value;
            t += 1.0;
            let x_end = x0 * t.exp();
            let q_end = self.survival(x_end);
            // past the last concept the integrand decays like e^{−λ_min x}
            if q_end * x_end <= 1e-3 * rel_tol * (head.sum() + tail.sum()) || t > 700.0 {
                break;
            }
        }
        head.sum() + tail.sum() + 0.5 * q0 - dq0 / 12.0
    }
}

/// Expected time via [`SurvivalProfile`]; suited to large `n` or overlaps
/// close to 1 where [`expected_time_series`] would need too many terms.
pub fn expected_time_fast(p: &OverlapVector, rel_tol: f64) -> ExpectedTime {
    let t = SurvivalProfile::new(p).expected_time(rel_tol);
    ExpectedTime::from_t(t, p.len(), rel_tol * t, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::OverlapDistribution;
    use crate::streams::trial_rng;

    fn v(p: &[f64]) -> OverlapVector {
        OverlapVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival(&v(&[0.5, 0.5]), 2), 0.4375);
        assert_eq!(survival(&OverlapVector::empty(), 7), 0.0);
        assert!((survival(&v(&[0.9]), 1) - 0.9).abs() < 1e-16);
        // tiny survival keeps relative precision
        let q = survival(&v(&[0.5]), 80);
        assert!((q / 0.5f64.powi(80) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sandwich_examples() {
        assert_eq!(sandwich(&v(&[0.5, 0.5]), 2), (0.25, 0.5));
        let (lo, hi) = sandwich(&v(&[0.9]), 3);
        assert!((lo - 0.729).abs() < 1e-15 && lo == hi);
        assert!((survival(&v(&[0.9]), 3) - lo).abs() < 1e-15);
        let (lo, hi) = sandwich(&v(&[0.99; 10]), 1);
        assert_eq!((lo, hi), (0.99, 1.0));
    }

    #[test]
    fn expected_time_examples() {
        let t = expected_time_series(&v(&[0.5]), 1e-14).unwrap();
        assert!((t.t - 1.0).abs() < 1e-13);
        assert!((t.steps_expectation - 2.0).abs() < 1e-13);
        let t = expected_time_series(&OverlapVector::empty(), 1e-14).unwrap();
        assert_eq!((t.t, t.steps_expectation), (0.0, 0.0));
        let t = expected_time_series(&v(&[0.5, 0.5]), 1e-14).unwrap();
        assert!((t.t - 5.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn subset_examples() {
        assert!((expected_time_subsets(&v(&[0.5, 0.5])).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        let q = 0.37;
        assert!((expected_time_subsets(&v(&[q])).unwrap() - q / (1.0 - q)).abs() < 1e-15);
        assert_eq!(expected_time_subsets(&v(&[0.0, 0.0])).unwrap(), 0.0);
        assert!(matches!(expected_time_subsets(&v(&[0.1; 26])), Err(Error::Size(_))));
    }

    #[test]
    fn subsets_match_series_with_zero_entries() {
        let p = v(&[0.3, 0.0, 0.8, 0.55, 0.0, 0.91]);
        let a = expected_time_subsets(&p).unwrap();
        let b = expected_time_series(&p, 1e-15).unwrap().t;
        assert!(((a - b) / b).abs() < 1e-12);
    }

    #[test]
    fn n_delta_examples() {
        assert_eq!(n_delta(&v(&[0.5]), 0.25).unwrap(), 2);
        assert_eq!(n_delta(&v(&[0.5, 0.5]), 0.4375).unwrap(), 2);
        assert_eq!(n_delta(&v(&[0.9]), 0.01).unwrap(), 44);
        assert_eq!(n_delta(&v(&[0.0, 0.0]), 0.5).unwrap(), 1);
        assert!(n_delta(&v(&[0.9]), 1.0).is_err());
    }

    #[test]
    fn n_delta_matches_log_ratio() {
        for &(p, d) in &[(0.9, 0.01), (0.99, 1e-3), (0.3, 0.2), (0.999, 0.5)] {
            let k = n_delta(&v(&[p]), d).unwrap();
            let expected = (f64::ln(d) / f64::ln(p)).ceil() as u64;
            assert_eq!(k, expected.max(1), "p={p} d={d}");
        }
    }

    #[test]
    fn coarse_bound_examples() {
        assert_eq!(coarse_bounds(&v(&[0.5, 0.75])), (6.0, 4.0));
        assert_eq!(coarse_bounds(&v(&[0.5])), (2.0, 2.0));
        let t = expected_time_series(&v(&[0.5, 0.5]), 1e-14).unwrap();
        let (upper, lower) = coarse_bounds(&v(&[0.5, 0.5]));
        assert!(t.t <= upper && t.steps_expectation >= lower);
    }

    #[test]
    fn survival_vanishes_for_large_k() {
        let p = v(&[0.3, 0.95, 0.7]);
        let k = (1e-12f64 / 3.0).ln() / 0.95f64.ln();
        assert!(survival(&p, k.ceil() as u64) < 1e-12);
    }

    #[test]
    fn profile_matches_integer_survival() {
        let p = v(&[0.2, 0.9, 0.5, 0.999, 0.0]);
        let prof = SurvivalProfile::new(&p);
        for k in [1u64, 2, 10, 100, 5000] {
            let a = survival(&p, k);
            let b = prof.survival(k as f64);
            assert!(((a - b) / a).abs() < 1e-12, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn fast_expected_time_matches_series() {
        let dists = [
            OverlapDistribution::uniform(),
            OverlapDistribution::power_tail(1.0).unwrap(),
            OverlapDistribution::power_tail(-0.5).unwrap(),
            OverlapDistribution::scaled(0.6, OverlapDistribution::uniform()).unwrap(),
        ];
        for (di, d) in dists.iter().enumerate() {
            for (trial, n) in [1usize, 2, 5, 20, 100, 300].into_iter().enumerate() {
                let mut rng = trial_rng(99, di as u64, trial as u64);
                let mut p = d.sample(n, &mut rng);
                if p.max() > 0.9999 {
                    // keep the direct series cheap
                    p = OverlapVector::new(p.iter().map(|x| x.min(0.9999)).collect()).unwrap();
                }
                let series = expected_time_series(&p, 1e-12).unwrap().t;
                let fast = expected_time_fast(&p, 1e-10).t;
                assert!(((fast - series) / series).abs() < 1e-9, "{d} n={n}: {fast} vs {series}");
            }
        }
    }
}
