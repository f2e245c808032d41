//! The moment zeta function `ζ_F(s) = Σ_{k≥1} m_k(F)^s` and the Mellin
//! transform of an overlap density.
//!
//! Truncation is controlled with two-sided bounds. For a distribution with a
//! power tail the real-order moment `m(x)` is log-convex, so `g = m^s` is
//! convex and decreasing and the Hermite–Hadamard inequalities give
//!
//! ```text
//! ∫_{K+1}^∞ g + g(K+1)/2  ≤  Σ_{k>K} g(k)  ≤  ∫_{K+1/2}^∞ g.
//! ```
//!
//! When the support stops at `r < 1` the moments decay geometrically and the
//! tail is bounded by a geometric series instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, OverlapDistribution};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special::{ln_gamma_ratio_scaled, NeumaierSum};
use crate::stats::{mean_stderr, winsorized_mean};
use crate::streams::{tag, trial_rng};

const INITIAL_TERMS: usize = 1_000;
const MAX_TERMS: usize = 1 << 27;
const ENDPOINT_WIDTH: f64 = 1e-6;

/// Cached moments `m_1, m_2, …` of one distribution. Append-only.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    dist: OverlapDistribution,
    cache: Vec<f64>,
    alpha: Option<f64>,
    tail_constant: Option<f64>,
}

impl MomentSequence {
    pub fn new(dist: &OverlapDistribution) -> Self {
        let tail = dist.tail_parameters().ok();
        Self {
            dist: dist.clone(),
            cache: Vec::new(),
            alpha: tail.map(|t| t.alpha),
            tail_constant: tail.map(|t| t.moment_constant),
        }
    }

    pub fn distribution(&self) -> &OverlapDistribution {
        &self.dist
    }

    /// Tail exponent, `None` when the moments decay geometrically.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn tail_constant(&self) -> Option<f64> {
        self.tail_constant
    }

    /// Make sure `m_1..=m_k` are cached.
    pub fn ensure(&mut self, k: usize) {
        let start = self.cache.len();
        if k > start {
            self.cache.extend((start + 1..=k).map(|j| self.dist.moment(j as u64)));
        }
    }

    /// `m_k` for `k ≥ 1`.
    pub fn get(&mut self, k: usize) -> f64 {
        assert!(k >= 1, "moments are indexed from 1");
        self.ensure(k);
        self.cache[k - 1]
    }

    /// The cached prefix `[m_1, m_2, …]`.
    pub fn cached(&self) -> &[f64] {
        &self.cache
    }
}

/// Mellin transform `M(f)(s) = ∫₀¹ f(x) x^{s−1} dx`, so `m_k = M(f)(k + 1)`.
pub fn mellin(dist: &OverlapDistribution, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::divergence(format!("Mellin transform diverges at s = {s}")));
    }
    Ok(match dist.family() {
        Family::Uniform => mellin_power(0.0, s),
        Family::PowerTail { beta } => mellin_power(*beta, s),
        // ∫₀^a f(x/a)/a · x^{s−1} dx = a^{s−1} M(f)(s)
        Family::ScaledSupport { a, inner } => a.powf(s - 1.0) * mellin(inner, s)?,
    })
}

// ∫₀^h C(e, j) (−1)^j t^{j + p − 1} ... summed: Σ_j C(e, j)(−1)^j h^{p+j}/(p+j)
fn endpoint_series(e: f64, p: f64, h: f64) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0;
    let mut hp = h.powf(p);
    for j in 0..60 {
        let jf = j as f64;
        let term = coeff * hp / (p + jf);
        total += term;
        if term.abs() <= 1e-18 * total.abs() {
            break;
        }
        coeff *= -(e - jf) / (jf + 1.0);
        hp *= h;
    }
    total
}

fn mellin_power(beta: f64, s: f64) -> f64 {
    let h = ENDPOINT_WIDTH;
    let norm = 1.0 + beta;
    // near 0: (1+β)(1−x)^β x^{s−1}
    let left = norm * endpoint_series(beta, s, h);
    // near 1, u = 1 − x: (1+β) u^β (1−u)^{s−1}
    let right = norm * endpoint_series(s - 1.0, beta + 1.0, h);
    let middle = integrate(
        |x| norm * (beta * (-x).ln_1p() + (s - 1.0) * x.ln()).exp(),
        h,
        1.0 - h,
        1e-300,
        1e-13,
    );
    left + middle.value + right
}

/// A truncated series value with a rigorous error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub error_bound: f64,
    /// Number of terms summed explicitly.
    pub terms: usize,
}

/// Two-sided bounds on `Σ_{k>K} m_k^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBounds {
    pub lower: f64,
    pub upper: f64,
}

impl TailBounds {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Whether `Σ m_k^s` converges.
pub fn check_convergence(dist: &OverlapDistribution, s: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::divergence(format!("moment zeta diverges for s = {s} <= 0")));
    }
    if let Ok(tail) = dist.tail_parameters() {
        if s * tail.alpha <= 1.0 {
            return Err(Error::divergence(format!(
                "moment zeta of {dist} needs s·α > 1, got s = {s}, α = {}",
                tail.alpha
            )));
        }
    }
    Ok(())
}

/// `∫_y^∞ M(t)^s dt` where `M(t) = m(t − 1) = c·t^{−α}·e^{−r(t)}` and
/// `r(t) = ln[Γ(t+α)/(Γ(t) t^α)]`. After `t = y·u^{−1/γ}`, `γ = αs − 1`,
/// the integrand becomes `exp(−s·r(t))`, smooth on `(0, 1]` and → 1 at 0.
fn power_tail_integral(alpha: f64, ln_c: f64, s: f64, y: f64) -> (f64, f64) {
    let gamma = alpha * s - 1.0;
    let prefactor = (s * ln_c + (1.0 - alpha * s) * y.ln()).exp() / gamma;
    if alpha == 1.0 {
        // uniform: r ≡ 0
        return (prefactor, 0.0);
    }
    let r = integrate(
        |u| (-s * ln_gamma_ratio_scaled(y * u.powf(-1.0 / gamma), alpha)).exp(),
        0.0,
        1.0,
        1e-15,
        1e-13,
    );
    (prefactor * r.value, prefactor * r.error)
}

/// Bounds on `Σ_{k>K} m_k^s`; `s` must be in the convergence domain.
pub fn tail_bounds(dist: &OverlapDistribution, s: f64, k: usize) -> TailBounds {
    let next = dist.moment(k as u64 + 1).powf(s);
    if let Some(r) = dist.geometric_ratio() {
        return TailBounds { lower: next, upper: next / (1.0 - r.powf(s)) };
    }
    let tail = dist.tail_parameters().expect("power tail when support reaches 1");
    let ln_c = tail.moment_constant.ln();
    let kf = k as f64;
    // m(x) = M(x + 1): integrate from x = K + 1 (t = K + 2) and x = K + 1/2
    let (from_next, e1) = power_tail_integral(tail.alpha, ln_c, s, kf + 2.0);
    let (from_mid, e2) = power_tail_integral(tail.alpha, ln_c, s, kf + 1.5);
    TailBounds { lower: (from_next - e1) + 0.5 * next, upper: from_mid + e2 }
}

/// `ζ_F(s) = Σ_{k≥1} m_k^s` to absolute accuracy `eps`.
pub fn zeta(dist: &OverlapDistribution, s: f64, eps: f64) -> Result<SeriesValue> {
    let mut moments = MomentSequence::new(dist);
    zeta_with(&mut moments, s, eps)
}

/// As [`zeta`], reusing a moment cache.
pub fn zeta_with(moments: &mut MomentSequence, s: f64, eps: f64) -> Result<SeriesValue> {
    let dist = moments.distribution().clone();
    check_convergence(&dist, s)?;
    if !(eps > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {eps}")));
    }
    let mut sum = NeumaierSum::new();
    let mut summed = 0usize;
    let mut k = INITIAL_TERMS;
    loop {
        moments.ensure(k);
        for &m in &moments.cached()[summed..k] {
            sum += m.powf(s);
        }
        summed = k;
        let tail = tail_bounds(&dist, s, k);
        let partial = sum.sum();
        let rounding = 4.0 * f64::EPSILON * sum.abs_sum();
        if tail.half_width() <= eps / 2.0 {
            return Ok(SeriesValue {
                value: partial + tail.midpoint(),
                error_bound: tail.half_width() + rounding,
                terms: k,
            });
        }
        if k >= MAX_TERMS {
            return Err(Error::Precision(format!(
                "zeta({s}) of {dist}: tail bound {:.3e} still above {eps:.3e} after {k} terms",
                tail.half_width()
            )));
        }
        k *= 2;
    }
}

/// Monte Carlo check of `E[Π xᵢ / (1 − Π xᵢ)] = ζ_F(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaExpectationCheck {
    pub n: usize,
    pub trials: usize,
    pub mc_estimate: f64,
    pub stderr: f64,
    pub zeta_value: f64,
    /// `n·α ≤ 2`: the summand has infinite variance and `stderr` is not a
    /// valid error scale.
    pub infinite_variance: bool,
    /// Mean with the top 0.01% winsorized; reported as a robust diagnostic.
    pub trimmed_mean: f64,
}

impl ZetaExpectationCheck {
    /// Deviation of the estimate in units of its standard error.
    pub fn z_score(&self) -> f64 {
        (self.mc_estimate - self.zeta_value) / self.stderr
    }
}

/// Compare the sample mean of `P/(1 − P)`, `P = x₁⋯x_n`, with `ζ_F(n)`.
///
/// With moments summed from `k = 1`, `Σ_{k≥1} E[P^k] = E[P/(1 − P)]`, which
/// is `E[1/(1 − P)] − 1`.
pub fn verify_zeta_expectation(
    dist: &OverlapDistribution,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ZetaExpectationCheck> {
    check_convergence(dist, n as f64).map_err(|_| {
        Error::divergence(format!("E[1/(1 - x1...x{n})] is undefined for {dist}: zeta diverges at s = {n}"))
    })?;
    let zeta_value = zeta(dist, n as f64, 1e-12)?.value;
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, tag::ZETA, i);
            let product: f64 = (0..n).map(|_| dist.sample_one(&mut rng)).product();
            product / (1.0 - product)
        })
        .collect();
    let est = mean_stderr(&samples);
    let infinite_variance = dist.tail_parameters().map(|t| n as f64 * t.alpha <= 2.0).unwrap_or(false);
    Ok(ZetaExpectationCheck {
        n,
        trials,
        mc_estimate: est.mean,
        stderr: est.stderr,
        zeta_value,
        infinite_variance,
        trimmed_mean: winsorized_mean(&samples, 1e-4),
    })
}
