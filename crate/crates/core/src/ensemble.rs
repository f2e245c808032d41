//! Expected learning time under a random overlap law, and the extreme-value
//! and concentration behavior of the overlaps themselves.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch_exact::expected_time_fast;
use crate::distributions::{Family, OverlapDistribution};
use crate::error::{Error, Result};
use crate::moment_zeta::{tail_bounds, zeta_with, MomentSequence};
use crate::quadrature::integrate;
use crate::special::{ln_gamma, ln_gamma_ratio, NeumaierSum};
use crate::stats::{ks_distance, mean_stderr, median, ols, quantile_sorted, sort_floats, trimmed_mean};
use crate::streams::{tag, trial_rng};

/// Relative tolerance for per-sample expected times.
pub const SAMPLE_REL_TOL: f64 = 1e-10;

// Head of the moment series stops once n·m_j drops below this.
const HEAD_CUTOFF: f64 = 0.05;
const MIN_HEAD_TERMS: usize = 1000;
const MAX_HEAD_TERMS: usize = 1 << 27;
const MAX_CONDITION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ZetaSum,
    MomentSeries,
    IntegralAsymptotic,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ZetaSum, Method::MomentSeries, Method::IntegralAsymptotic, Method::MonteCarlo];

    pub fn name(self) -> &'static str {
        match self {
            Method::ZetaSum => "zeta_sum",
            Method::MomentSeries => "moment_series",
            Method::IntegralAsymptotic => "integral_asymptotic",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::config(format!("unknown method {s:?}")))
    }
}

/// One estimate of the expected time at a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub n: usize,
    pub method: Method,
    pub value: f64,
    /// `None` when the method has no error bound (asymptotic formula,
    /// Monte Carlo median).
    pub error_bound: Option<f64>,
}

fn require_alpha_above_one(dist: &OverlapDistribution, what: &str) -> Result<()> {
    match dist.tail_parameters() {
        Ok(t) if t.alpha <= 1.0 => Err(Error::divergence(format!(
            "{what} needs α > 1 but {dist} has α = {}; E[T] does not exist",
            t.alpha
        ))),
        _ => Ok(()),
    }
}

/// `T = Σ_{k=1}^n (−1)^{k+1} C(n,k) ζ_F(k)`.
///
/// The alternating sum loses roughly `log₂(Σ|terms| / T)` bits; past a
/// condition number of 10⁶ the result is refused. Intended as a small-`n`
/// cross-check of [`expected_time_moment_series`].
pub fn expected_time_zeta_sum(dist: &OverlapDistribution, n: usize) -> Result<EnsembleEstimate> {
    if n == 0 {
        return Ok(EnsembleEstimate { n, method: Method::ZetaSum, value: 0.0, error_bound: Some(0.0) });
    }
    require_alpha_above_one(dist, "the zeta sum")?;
    let mut moments = MomentSequence::new(dist);
    let mut sum = NeumaierSum::new();
    let mut zeta_error = 0.0;
    let mut binom = 1.0;
    for k in 1..=n {
        binom *= (n - k + 1) as f64 / k as f64;
        let z = zeta_with(&mut moments, k as f64, 1e-14)?;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * binom * z.value;
        zeta_error += binom * z.error_bound;
    }
    let value = sum.sum();
    let condition = sum.abs_sum() / value.abs();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Precision(format!(
            "zeta sum at n = {n} cancels by a factor {condition:.3e}; use the moment series"
        )));
    }
    let error = zeta_error + 4.0 * f64::EPSILON * sum.abs_sum();
    Ok(EnsembleEstimate { n, method: Method::ZetaSum, value, error_bound: Some(error) })
}

/// `Σ_{j>J} Σ_{r≥r₀} (−1)^{r+1} C(n,r) m_j^r` via tail bounds on
/// `S_r = Σ_{j>J} m_j^r`. Requires `n·m_{J+1} < 1`, which makes the terms
/// decrease in `r`, so the first omitted one bounds the truncation.
fn binomial_tail(dist: &OverlapDistribution, n: usize, head: usize, r0: usize, eps: f64) -> (f64, f64) {
    let nf = n as f64;
    let mut value = NeumaierSum::new();
    let mut error = 0.0;
    let mut binom = 1.0;
    for r in 1..r0 {
        binom *= (nf - r as f64 + 1.0) / r as f64;
    }
    let mut r = r0;
    loop {
        if r > n {
            break;
        }
        binom *= (nf - r as f64 + 1.0) / r as f64;
        let s = tail_bounds(dist, r as f64, head);
        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
        value += sign * binom * s.midpoint();
        error += binom * s.half_width();
        let bound_next = binom * (nf - r as f64) / (r as f64 + 1.0) * s.upper * dist.moment(head as u64 + 1);
        r += 1;
        if bound_next <= 0.25 * eps || r > n {
            if r <= n {
                error += bound_next;
            }
            break;
        }
    }
    (value.sum(), error)
}

/// `Σ_j f(m_j)` where `f(m) = Σ_{r≥r₀} (−1)^{r+1} C(n,r) m^r`.
///
/// Terms are summed explicitly at least while `n·m_j ≥ HEAD_CUTOFF` and
/// then further, doubling the split point, until the expanded tail is
/// bracketed to within `eps`.
fn split_series<F: Fn(f64) -> f64>(dist: &OverlapDistribution, n: usize, r0: usize, eps: f64, term: F) -> Result<(f64, f64)> {
    let nf = n as f64;
    let mut sum = NeumaierSum::new();
    let mut j = 0usize;
    let mut target = MIN_HEAD_TERMS;
    loop {
        loop {
            let m = dist.moment(j as u64 + 1);
            if j >= target && nf * m < HEAD_CUTOFF {
                break;
            }
            sum += term(m);
            j += 1;
        }
        let (tail, tail_error) = binomial_tail(dist, n, j, r0, eps);
        let error = tail_error + 4.0 * f64::EPSILON * (sum.abs_sum() + tail.abs());
        if error <= eps {
            return Ok((sum.sum() + tail, error));
        }
        if j >= MAX_HEAD_TERMS {
            return Err(Error::Precision(format!(
                "moment series at n = {n}: error bound {error:.3e} above {eps:.3e} after {j} terms"
            )));
        }
        target = 2 * j;
    }
}

/// `T = Σ_{j≥1} [1 − (1 − m_j)^n]` to absolute accuracy about `eps`.
///
/// Terms with `n·m_j ≥ 0.05` are summed directly; the rest are expanded in
/// powers of `m_j` and handled through zeta tails.
pub fn expected_time_moment_series(dist: &OverlapDistribution, n: usize, eps: f64) -> Result<EnsembleEstimate> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {eps}")));
    }
    if n == 0 {
        return Ok(EnsembleEstimate { n, method: Method::MomentSeries, value: 0.0, error_bound: Some(0.0) });
    }
    require_alpha_above_one(dist, "the moment series")?;
    let nf = n as f64;
    let (value, error) = split_series(dist, n, 1, eps, |m| -(nf * (-m).ln_1p()).exp_m1())?;
    Ok(EnsembleEstimate { n, method: Method::MomentSeries, value, error_bound: Some(error) })
}

/// The `α = 1` split `T = T₁ + T₂` with `T₁ = Σ pᵢ/(1 − pᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha1Decomposition {
    pub n: usize,
    /// `E[T₂] = −Σ_j [(1 − m_j)^n − 1 + n·m_j]`.
    pub t2: f64,
    pub t2_error: f64,
    /// `c = lim j·m_j`, extrapolated.
    pub c: f64,
    /// `c·n·ln n`, the leading part of `−T₂`.
    pub c_log_term: f64,
}

impl Alpha1Decomposition {
    /// `T₂ / (n ln n)`, which tends to `−c`.
    pub fn normalized(&self) -> f64 {
        let nf = self.n as f64;
        self.t2 / (nf * nf.ln())
    }
}

/// `lim j·m_j` by two rounds of Richardson extrapolation on
/// `j ∈ {1000, 2000, 4000}`, assuming `j·m_j = c + a/j + b/j² + …`.
pub fn extrapolated_tail_constant(dist: &OverlapDistribution) -> f64 {
    let c = |j: u64| j as f64 * dist.moment(j);
    let (c1, c2, c4) = (c(1000), c(2000), c(4000));
    let r1 = 2.0 * c2 - c1;
    let r2 = 2.0 * c4 - c2;
    (4.0 * r2 - r1) / 3.0
}

pub fn alpha1_decomposition(dist: &OverlapDistribution, n: usize, eps: f64) -> Result<Alpha1Decomposition> {
    let alpha = dist.tail_parameters()?.alpha;
    if alpha != 1.0 {
        return Err(Error::domain(format!("the α = 1 decomposition does not apply to {dist} (α = {alpha})")));
    }
    if n < 2 {
        return Err(Error::domain(format!("the α = 1 decomposition needs n ≥ 2, got {n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {eps}")));
    }
    let nf = n as f64;
    // −[(1 − m)^n − 1 + n·m] written so nothing cancels for small n·m
    let (t2, t2_error) = split_series(dist, n, 2, eps, |m| -((nf * (-m).ln_1p()).exp_m1() + nf * m))?;
    let c = extrapolated_tail_constant(dist);
    Ok(Alpha1Decomposition {
        n,
        t2,
        t2_error,
        c,
        c_log_term: c * nf * nf.ln(),
    })
}

/// `n^{1/α} ∫₀^∞ (1 − e^{−c·u^α}) / u² du` with `c` the moment tail constant.
pub fn expected_time_integral(dist: &OverlapDistribution, n: usize) -> Result<EnsembleEstimate> {
    require_alpha_above_one(dist, "the integral asymptotic")?;
    let tail = dist.tail_parameters()?;
    let (alpha, c) = (tail.alpha, tail.moment_constant);
    // [0, 1] with u = v^{1/(α−1)}: the integrand becomes (1 − e^{−c·x})/x
    // at x = u^α, divided by α − 1
    let near = integrate(
        |v| {
            let x = v.powf(alpha / (alpha - 1.0));
            if x == 0.0 {
                c
            } else {
                -(-c * x).exp_m1() / x
            }
        },
        0.0,
        1.0,
        1e-15,
        1e-12,
    );
    // [1, ∞) with u = 1/t
    let far = integrate(|t| if t == 0.0 { 1.0 } else { -(-c * t.powf(-alpha)).exp_m1() }, 0.0, 1.0, 1e-15, 1e-12);
    let integral = near.value / (alpha - 1.0) + far.value;
    Ok(EnsembleEstimate {
        n,
        method: Method::IntegralAsymptotic,
        value: (n as f64).powf(1.0 / alpha) * integral,
        error_bound: None,
    })
}

/// `c^{1/α} Γ(1 − 1/α)`, the closed form of the limit integral.
pub fn integral_constant(alpha: f64, c: f64) -> f64 {
    c.powf(1.0 / alpha) * ln_gamma(1.0 - 1.0 / alpha).exp()
}

/// Expected time of `trials` independent overlap vectors of length `n`,
/// returned in trial order.
pub fn sample_expected_times(dist: &OverlapDistribution, n: usize, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, tag::OVERLAPS, i);
            expected_time_fast(&dist.sample(n, &mut rng), SAMPLE_REL_TOL).t
        })
        .collect()
}

/// Monte Carlo over sampled overlap vectors: mean ± stderr when `α > 1`,
/// otherwise the median (the mean does not exist).
pub fn expected_time_monte_carlo(dist: &OverlapDistribution, n: usize, trials: usize, seed: u64) -> Result<EnsembleEstimate> {
    if trials == 0 {
        return Err(Error::domain("Monte Carlo needs at least one trial"));
    }
    let times = sample_expected_times(dist, n, trials, seed);
    let heavy = dist.tail_parameters().map(|t| t.alpha <= 1.0).unwrap_or(false);
    let (value, error_bound) = if heavy {
        (median(&times), None)
    } else {
        let est = mean_stderr(&times);
        (est.mean, Some(est.stderr))
    };
    Ok(EnsembleEstimate { n, method: Method::MonteCarlo, value, error_bound })
}

pub fn estimate(dist: &OverlapDistribution, n: usize, method: Method, eps: f64, trials: usize, seed: u64) -> Result<EnsembleEstimate> {
    match method {
        Method::ZetaSum => expected_time_zeta_sum(dist, n),
        Method::MomentSeries => expected_time_moment_series(dist, n, eps),
        Method::IntegralAsymptotic => expected_time_integral(dist, n),
        Method::MonteCarlo => expected_time_monte_carlo(dist, n, trials, seed),
    }
}

/// Spread of the per-sample `T / n` for `α = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawOfLargeNumbers {
    pub n: usize,
    pub trials: usize,
    pub median_ratio: f64,
    /// Mean of `T/n` with 1% dropped from each end.
    pub trimmed_mean_ratio: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
}

pub fn law_of_large_numbers(dist: &OverlapDistribution, n: usize, trials: usize, seed: u64) -> LawOfLargeNumbers {
    let nf = n as f64;
    let mut ratios: Vec<f64> = sample_expected_times(dist, n, trials, seed).into_iter().map(|t| t / nf).collect();
    let trimmed_mean_ratio = trimmed_mean(&ratios, 0.01);
    sort_floats(&mut ratios);
    LawOfLargeNumbers {
        n,
        trials,
        median_ratio: quantile_sorted(&ratios, 0.5),
        trimmed_mean_ratio,
        lower_quartile: quantile_sorted(&ratios, 0.25),
        upper_quartile: quantile_sorted(&ratios, 0.75),
    }
}

/// Normalization of `S = Σ 1/(1 − pᵢ)` for the regime of the overlap law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSumScale {
    /// `S / n`, the law of large numbers regime `β > 0` or no power tail.
    Linear,
    /// `S / (n ln n)` at `β = 0`.
    NLogN,
    /// `S / n^{1/(1+β)}` for `β < 0`.
    Stable,
}

impl GapSumScale {
    pub fn of(dist: &OverlapDistribution) -> Self {
        match dist.tail_parameters() {
            Ok(t) if t.alpha == 1.0 => GapSumScale::NLogN,
            Ok(t) if t.alpha < 1.0 => GapSumScale::Stable,
            _ => GapSumScale::Linear,
        }
    }

    pub fn factor(self, n: usize, alpha: f64) -> f64 {
        let nf = n as f64;
        match self {
            GapSumScale::Linear => nf,
            GapSumScale::NLogN => nf * nf.ln(),
            GapSumScale::Stable => nf.powf(1.0 / alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSumSummary {
    pub n: usize,
    pub trials: usize,
    pub scale: GapSumScale,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub interquartile_range: f64,
}

/// Empirical law of the normalized `S = Σ 1/(1 − pᵢ)`.
pub fn sum_inverse_gap_concentration(dist: &OverlapDistribution, n: usize, trials: usize, seed: u64) -> Result<GapSumSummary> {
    if trials == 0 {
        return Err(Error::domain("concentration check needs at least one trial"));
    }
    let scale = GapSumScale::of(dist);
    let alpha = dist.tail_parameters().map(|t| t.alpha).unwrap_or(f64::INFINITY);
    let factor = scale.factor(n, alpha);
    let mut values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, tag::ENSEMBLE, i);
            let s: NeumaierSum = (0..n).map(|_| 1.0 / (1.0 - dist.sample_one(&mut rng))).sum();
            s.sum() / factor
        })
        .collect();
    sort_floats(&mut values);
    let (q1, q3) = (quantile_sorted(&values, 0.25), quantile_sorted(&values, 0.75));
    Ok(GapSumSummary {
        n,
        trials,
        scale,
        median: quantile_sorted(&values, 0.5),
        lower_quartile: q1,
        upper_quartile: q3,
        interquartile_range: q3 - q1,
    })
}

/// Smallest gap `min(1 − pᵢ)` over sampled overlap vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeValueSummary {
    pub n: usize,
    pub trials: usize,
    pub mean_min_gap: f64,
    pub stderr: f64,
    /// `Γ(n+1)Γ(1+1/α)/Γ(n+1+1/α)` when the gap CDF is exactly `y^α`.
    pub exact_mean: Option<f64>,
    /// KS distance of `(n·c/α)^{1/α}·min gap` to `1 − exp(−x^α)`;
    /// NaN without a power tail.
    pub ks_distance: f64,
}

fn exact_mean_min_gap(dist: &OverlapDistribution, n: usize) -> Option<f64> {
    let alpha = match dist.family() {
        Family::Uniform => 1.0,
        Family::PowerTail { beta } => beta + 1.0,
        Family::ScaledSupport { .. } => return None,
    };
    let nf = n as f64;
    Some((ln_gamma(1.0 + 1.0 / alpha) - ln_gamma_ratio(nf + 1.0, 1.0 / alpha)).exp())
}

pub fn extreme_value(dist: &OverlapDistribution, n: usize, trials: usize, seed: u64) -> Result<ExtremeValueSummary> {
    if n == 0 || trials == 0 {
        return Err(Error::domain("extreme-value statistics need n ≥ 1 and at least one trial"));
    }
    let gaps: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, tag::EXTREMES, i);
            (0..n).map(|_| 1.0 - dist.sample_one(&mut rng)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let est = mean_stderr(&gaps);
    let ks = match dist.tail_parameters() {
        Ok(t) => {
            let scale = (n as f64 * t.density_constant / t.alpha).powf(1.0 / t.alpha);
            let scaled: Vec<f64> = gaps.iter().map(|g| g * scale).collect();
            ks_distance(&scaled, |x| -(-x.powf(t.alpha)).exp_m1())
        }
        Err(_) => f64::NAN,
    };
    Ok(ExtremeValueSummary {
        n,
        trials,
        mean_min_gap: est.mean,
        stderr: est.stderr,
        exact_mean: exact_mean_min_gap(dist, n),
        ks_distance: ks,
    })
}

/// Regression of `ln E[min gap]` on `ln n` across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeValueSweep {
    pub points: Vec<ExtremeValueSummary>,
    pub slope: f64,
    /// `exp(intercept)`: the fitted `C` in `E[min gap] ≈ C·n^{slope}`.
    pub fitted_c: f64,
    /// `∫₀^∞ exp(−u^{1/α}) du = Γ(α + 1)`.
    pub c_proof_form: Option<f64>,
    /// `∫₀^∞ exp(−u^α) du = Γ(1 + 1/α)`, implied by the limit law.
    pub c_limit_form: Option<f64>,
}

impl ExtremeValueSweep {
    /// Which closed form is closer to the fitted constant.
    pub fn closer_form(&self) -> Option<&'static str> {
        let (p, l) = (self.c_proof_form?, self.c_limit_form?);
        let dp = (self.fitted_c / p).ln().abs();
        let dl = (self.fitted_c / l).ln().abs();
        Some(if dl <= dp { "limit" } else { "proof" })
    }
}

pub fn extreme_value_sweep(dist: &OverlapDistribution, ns: &[usize], trials: usize, seed: u64) -> Result<ExtremeValueSweep> {
    if ns.len() < 2 {
        return Err(Error::config("extreme-value sweep needs at least two n values"));
    }
    let points = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| extreme_value(dist, n, trials, crate::streams::derive(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_min_gap.ln()).collect();
    let fit = ols(&xs, &ys);
    let alpha = dist.tail_parameters().ok().map(|t| t.alpha);
    Ok(ExtremeValueSweep {
        points,
        slope: fit.slope,
        fitted_c: fit.intercept.exp(),
        c_proof_form: alpha.map(|a| ln_gamma(a + 1.0).exp()),
        c_limit_form: alpha.map(|a| ln_gamma(1.0 + 1.0 / a).exp()),
    })
}

/// Regimes of the bounds check on per-sample expected times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllgenRegime {
    /// `β > 0`: `C₁ n^{1/(1+β)} ≤ T ≤ C₂ n`.
    Light,
    /// `β = 0`: `C₁ n ≤ T ≤ C₂ n ln n`.
    Critical,
    /// `β < 0`: `n^{1/(1+β)}/C ≤ T ≤ C n^{1/(1+β)}`.
    Heavy,
}

impl AllgenRegime {
    pub fn of_alpha(alpha: f64) -> Self {
        if alpha > 1.0 {
            AllgenRegime::Light
        } else if alpha == 1.0 {
            AllgenRegime::Critical
        } else {
            AllgenRegime::Heavy
        }
    }

    /// `(lower scale, upper scale)` multiplying `C₁` and `C₂`.
    pub fn scales(self, n: usize, alpha: f64) -> (f64, f64) {
        let nf = n as f64;
        match self {
            AllgenRegime::Light => (nf.powf(1.0 / alpha), nf),
            AllgenRegime::Critical => (nf, nf * nf.ln()),
            AllgenRegime::Heavy => (nf.powf(1.0 / alpha), nf.powf(1.0 / alpha)),
        }
    }
}

/// Frozen constants for [`allgen_bounds_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllgenConstants {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Deserialize)]
struct AllgenFixture {
    version: u32,
    coverage: f64,
    light: AllgenConstants,
    critical: AllgenConstants,
    heavy: AllgenConstants,
}

const ALLGEN_FIXTURE: &str = include_str!("../fixtures/allgen_constants.toml");

fn allgen_fixture() -> AllgenFixture {
    toml::from_str(ALLGEN_FIXTURE).expect("bundled allgen fixture parses")
}

/// Version of the bundled constants file.
pub fn allgen_fixture_version() -> u32 {
    allgen_fixture().version
}

/// Required fraction of samples inside the frozen window.
pub fn allgen_required_coverage() -> f64 {
    allgen_fixture().coverage
}

pub fn allgen_constants(regime: AllgenRegime) -> AllgenConstants {
    let f = allgen_fixture();
    match regime {
        AllgenRegime::Light => f.light,
        AllgenRegime::Critical => f.critical,
        AllgenRegime::Heavy => f.heavy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllgenReport {
    pub n: usize,
    pub trials: usize,
    pub regime: AllgenRegime,
    pub constants: AllgenConstants,
    /// Fraction of samples with `C₁·lower ≤ T ≤ C₂·upper`.
    pub coverage: f64,
    pub passed: bool,
    /// `min T / lower scale` over the samples.
    pub empirical_c1: f64,
    /// `max T / upper scale` over the samples.
    pub empirical_c2: f64,
    /// `β ≤ −1/2`, where only these bounds are available.
    pub outside_analyzed_regime: bool,
}

/// Check that per-sample expected times fall in the window of the regime.
pub fn allgen_bounds_check(dist: &OverlapDistribution, n: usize, trials: usize, seed: u64) -> Result<AllgenReport> {
    let alpha = dist.tail_parameters()?.alpha;
    let regime = AllgenRegime::of_alpha(alpha);
    allgen_bounds_check_with(dist, n, trials, seed, allgen_constants(regime))
}

/// As [`allgen_bounds_check`] with explicit constants.
pub fn allgen_bounds_check_with(
    dist: &OverlapDistribution,
    n: usize,
    trials: usize,
    seed: u64,
    constants: AllgenConstants,
) -> Result<AllgenReport> {
    if trials == 0 {
        return Err(Error::domain("bounds check needs at least one trial"));
    }
    let alpha = dist.tail_parameters()?.alpha;
    let regime = AllgenRegime::of_alpha(alpha);
    let (lo, hi) = regime.scales(n, alpha);
    let times = sample_expected_times(dist, n, trials, seed);
    let inside = times.iter().filter(|&&t| t >= constants.c1 * lo && t <= constants.c2 * hi).count();
    let coverage = inside as f64 / trials as f64;
    Ok(AllgenReport {
        n,
        trials,
        regime,
        constants,
        coverage,
        passed: coverage >= allgen_required_coverage(),
        empirical_c1: times.iter().fold(f64::INFINITY, |a, &t| a.min(t / lo)),
        empirical_c2: times.iter().fold(0.0, |a: f64, &t| a.max(t / hi)),
        outside_analyzed_regime: alpha <= 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn beta(b: f64) -> OverlapDistribution {
        OverlapDistribution::power_tail(b).unwrap()
    }

    /// `Σ_{j≤J} [1 − (1 − m_j)^n]` plus the β = 1 tail
    /// `n·Σ_{j>J} 2/((j+1)(j+2)) = 2n/(J+2)`, exact to O(n²/J³).
    fn beta1_direct(n: usize) -> f64 {
        let j_max = 10_000_000u64;
        let nf = n as f64;
        let head: NeumaierSum = (1..=j_max)
            .map(|j| {
                let m = 2.0 / ((j as f64 + 1.0) * (j as f64 + 2.0));
                -(nf * (-m).ln_1p()).exp_m1()
            })
            .sum();
        head.sum() + 2.0 * nf / (j_max as f64 + 2.0)
    }

    #[test]
    fn zeta_sum_examples() {
        let d = beta(1.0);
        let t1 = expected_time_zeta_sum(&d, 1).unwrap();
        assert!((t1.value - 1.0).abs() < 1e-12);
        let t2 = expected_time_zeta_sum(&d, 2).unwrap();
        let series = expected_time_moment_series(&d, 2, 1e-13).unwrap();
        assert!((t2.value - series.value).abs() < 1e-10);
        assert!(matches!(expected_time_zeta_sum(&OverlapDistribution::uniform(), 1), Err(Error::Divergence(_))));
    }

    #[test]
    fn zeta_sum_matches_moment_series() {
        for b in [1.0, 2.5] {
            for n in 1..=10 {
                let a = expected_time_zeta_sum(&beta(b), n).unwrap();
                let s = expected_time_moment_series(&beta(b), n, 1e-12).unwrap();
                assert!((a.value - s.value).abs() < 1e-8, "beta={b} n={n}: {} vs {}", a.value, s.value);
            }
        }
    }

    #[test]
    fn zeta_sum_refuses_heavy_cancellation() {
        // ζ(k) ≈ 3^{−k}, so Σ|terms| grows like (4/3)^n while T ~ √n
        assert!(matches!(expected_time_zeta_sum(&beta(1.0), 80), Err(Error::Precision(_))));
    }

    #[test]
    fn moment_series_against_direct_sum() {
        let d = beta(1.0);
        for n in [1usize, 7, 100, 3000] {
            let s = expected_time_moment_series(&d, n, 1e-11).unwrap();
            let direct = beta1_direct(n);
            assert!((s.value - direct).abs() < 1e-8 * direct.max(1.0), "n={n}: {} vs {direct}", s.value);
            assert!(s.error_bound.unwrap() < 1e-9 * direct.max(1.0));
        }
    }

    #[test]
    fn moment_series_geometric_moments() {
        // m_j = a^j / (j + 1): every term is explicit
        let a = 0.7;
        let d = OverlapDistribution::scaled(a, OverlapDistribution::uniform()).unwrap();
        let n = 50;
        let direct: NeumaierSum = (1..2000)
            .map(|j| {
                let m = a.powi(j) / (j as f64 + 1.0);
                -(n as f64 * (-m).ln_1p()).exp_m1()
            })
            .sum();
        let s = expected_time_moment_series(&d, n, 1e-13).unwrap();
        assert!((s.value - direct.sum()).abs() < 1e-11);
    }

    #[test]
    fn moment_series_diverges_for_alpha_le_1() {
        for d in [OverlapDistribution::uniform(), beta(-0.5)] {
            assert!(matches!(expected_time_moment_series(&d, 5, 1e-9), Err(Error::Divergence(_))));
        }
    }

    #[test]
    fn uniform_t2_at_two() {
        let d = OverlapDistribution::uniform();
        let dec = alpha1_decomposition(&d, 2, 1e-13).unwrap();
        assert!((dec.t2 + (PI * PI / 6.0 - 1.0)).abs() < 1e-10, "{}", dec.t2);
        assert!(alpha1_decomposition(&beta(1.0), 2, 1e-9).is_err());
    }

    #[test]
    fn t2_against_direct_sum() {
        // −Σ_j [(1 − m)^n − 1 + n m], m = 1/(j+1); beyond J the summand is
        // C(n,2) m² − C(n,3) m³ + …, with Σ_{j>J} 1/(j+1)² ≈ 1/(J + 3/2)
        let n = 40usize;
        let nf = n as f64;
        let j_max = 2_000_000u64;
        let head: NeumaierSum = (1..=j_max)
            .map(|j| {
                let m = 1.0 / (j as f64 + 1.0);
                -((nf * (-m).ln_1p()).exp_m1() + nf * m)
            })
            .sum();
        let tail = nf * (nf - 1.0) / 2.0 / (j_max as f64 + 1.5);
        let direct = head.sum() - tail;
        let dec = alpha1_decomposition(&OverlapDistribution::uniform(), n, 1e-12).unwrap();
        assert!((dec.t2 - direct).abs() < 1e-6 * direct.abs(), "{} vs {direct}", dec.t2);
    }

    #[test]
    fn extrapolated_constants() {
        assert!((extrapolated_tail_constant(&OverlapDistribution::uniform()) - 1.0).abs() < 1e-9);
        assert!((extrapolated_tail_constant(&beta(0.0)) - 1.0).abs() < 1e-9);
        let scaled = OverlapDistribution::scaled(1.0, OverlapDistribution::uniform()).unwrap();
        assert!((extrapolated_tail_constant(&scaled) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integral_matches_closed_form() {
        for b in [0.5, 1.0, 3.0] {
            let d = beta(b);
            let t = d.tail_parameters().unwrap();
            let v = expected_time_integral(&d, 1).unwrap().value;
            let exact = integral_constant(t.alpha, t.moment_constant);
            assert!(((v - exact) / exact).abs() < 1e-9, "beta={b}: {v} vs {exact}");
        }
        let a = expected_time_integral(&beta(1.0), 1000).unwrap().value;
        let b = expected_time_integral(&beta(1.0), 2000).unwrap().value;
        assert!((b / a - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn integral_tracks_moment_series() {
        let d = beta(1.0);
        let n = 10_000;
        let i = expected_time_integral(&d, n).unwrap().value;
        let s = expected_time_moment_series(&d, n, 1e-9).unwrap().value;
        assert!((i / s - 1.0).abs() < 0.05, "{i} vs {s}");
    }

    #[test]
    fn exact_min_gap_mean() {
        let e = exact_mean_min_gap(&OverlapDistribution::uniform(), 9).unwrap();
        assert!((e - 0.1).abs() < 1e-14);
        // β = 1: gap CDF y², E[min] = ∫(1 − y²)^n dy
        let n = 4;
        let quad = integrate(|y| (1.0 - y * y).powi(n), 0.0, 1.0, 1e-15, 1e-13).value;
        let e = exact_mean_min_gap(&beta(1.0), n as usize).unwrap();
        assert!((e - quad).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn fixture_is_readable() {
        let c = allgen_constants(AllgenRegime::Light);
        assert!(c.c1 < c.c2);
        assert!(allgen_required_coverage() > 0.5);
    }
}
