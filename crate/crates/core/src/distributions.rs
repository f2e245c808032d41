//! Overlap distributions: the common law of the overlap probabilities.
//!
//! Every family here has density behaving like `c·(1 − x)^β` at the right
//! end of its support:
//!
//! * `Uniform`: density 1 on `[0, 1]` (β = 0, c = 1);
//! * `PowerTail`: density `(1 + β)(1 − x)^β` on `[0, 1]`, β > −1;
//! * `ScaledSupport`: `a·X` for `X` drawn from an inner family, supported
//!   on `[0, a]`.
//!
//! Families are written in configuration as `uniform`,
//! `powertail:beta=<float>` and `scaled:a=<float>,inner=<spec>`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::special::{ln_gamma, ln_gamma_ratio};
use crate::streams::open_unit;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform,
    PowerTail { beta: f64 },
    ScaledSupport { a: f64, inner: Box<OverlapDistribution> },
}

/// An overlap law, validated at construction and immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapDistribution {
    family: Family,
}

/// Tail exponent and constants of a distribution with a power tail at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParameters {
    /// `α = β + 1`, the decay exponent of the moments.
    pub alpha: f64,
    /// `c` in `f(1 − x) ≍ c·x^β`.
    pub density_constant: f64,
    /// `lim m_k·k^α = c·Γ(β + 1)`.
    pub moment_constant: f64,
}

impl OverlapDistribution {
    pub fn uniform() -> Self {
        Self { family: Family::Uniform }
    }

    pub fn power_tail(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > -1.0) {
            return Err(Error::domain(format!("power tail exponent must exceed -1, got {beta}")));
        }
        Ok(Self { family: Family::PowerTail { beta } })
    }

    pub fn scaled(a: f64, inner: OverlapDistribution) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::domain(format!("support endpoint must lie in (0, 1], got {a}")));
        }
        Ok(Self { family: Family::ScaledSupport { a, inner: Box::new(inner) } })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Tail exponent β of the innermost family.
    pub fn beta(&self) -> f64 {
        match &self.family {
            Family::Uniform => 0.0,
            Family::PowerTail { beta } => *beta,
            Family::ScaledSupport { inner, .. } => inner.beta(),
        }
    }

    /// Right endpoint of the support.
    pub fn support_max(&self) -> f64 {
        match &self.family {
            Family::Uniform | Family::PowerTail { .. } => 1.0,
            Family::ScaledSupport { a, inner } => a * inner.support_max(),
        }
    }

    fn check_unit(x: f64) -> Result<()> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::domain(format!("argument {x} outside [0, 1]")))
        }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        Self::check_unit(x)?;
        Ok(self.density_unchecked(x))
    }

    fn density_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            Family::Uniform => 1.0,
            Family::PowerTail { beta } => (1.0 + beta) * (1.0 - x).powf(*beta),
            Family::ScaledSupport { a, inner } => {
                if x > *a {
                    0.0
                } else {
                    inner.density_unchecked(x / a) / a
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Self::check_unit(x)?;
        Ok(self.cdf_unchecked(x))
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            Family::Uniform => x,
            Family::PowerTail { beta } => -((1.0 + beta) * (-x).ln_1p()).exp_m1(),
            Family::ScaledSupport { a, inner } => inner.cdf_unchecked((x / a).min(1.0)),
        }
    }

    /// One draw by inversion; never returns exactly 1.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = self.draw(rng);
            if x < 1.0 {
                return x;
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Uniform => rng.random::<f64>(),
            // 1 − V^{1/(1+β)} with V uniform on (0, 1]
            Family::PowerTail { beta } => 1.0 - open_unit(rng).powf(1.0 / (1.0 + beta)),
            Family::ScaledSupport { a, inner } => a * inner.sample_one(rng),
        }
    }

    /// `n` independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> OverlapVector {
        OverlapVector((0..n).map(|_| self.sample_one(rng)).collect())
    }

    /// `m_k = ∫ x^k F(dx)` for `k ≥ 1`.
    pub fn moment(&self, k: u64) -> f64 {
        match &self.family {
            Family::Uniform => 1.0 / (k as f64 + 1.0),
            Family::PowerTail { beta } => power_tail_moment(*beta, k as f64),
            Family::ScaledSupport { a, inner } => a.powf(k as f64) * inner.moment(k),
        }
    }

    /// Moment of real order `x ≥ 0`, i.e. the Mellin transform of the
    /// density at `x + 1`. Decreasing and log-convex in `x`.
    pub fn moment_fn(&self, x: f64) -> f64 {
        self.ln_moment_fn(x).exp()
    }

    pub fn ln_moment_fn(&self, x: f64) -> f64 {
        match &self.family {
            Family::Uniform => -(x.ln_1p()),
            Family::PowerTail { beta } => power_tail_moment(*beta, x).ln(),
            Family::ScaledSupport { a, inner } => x * a.ln() + inner.ln_moment_fn(x),
        }
    }

    /// Tail exponent and constants; fails when the support stops short of 1.
    pub fn tail_parameters(&self) -> Result<TailParameters> {
        match &self.family {
            Family::Uniform => Ok(TailParameters { alpha: 1.0, density_constant: 1.0, moment_constant: 1.0 }),
            Family::PowerTail { beta } => {
                let alpha = beta + 1.0;
                Ok(TailParameters {
                    alpha,
                    density_constant: alpha,
                    // (1 + β)·Γ(1 + β) = Γ(2 + β)
                    moment_constant: ln_gamma(alpha + 1.0).exp(),
                })
            }
            Family::ScaledSupport { a, inner } => {
                if *a < 1.0 {
                    Err(Error::NoPowerTail(format!(
                        "support ends at {} < 1; moments decay geometrically",
                        self.support_max()
                    )))
                } else {
                    inner.tail_parameters()
                }
            }
        }
    }

    /// Whether the moments decay like a power `k^{-α}`.
    pub fn has_power_tail(&self) -> bool {
        self.tail_parameters().is_ok()
    }

    /// Largest `r < 1` with `m_{k+1} ≤ r·m_k` for all `k`, when the support
    /// stops short of 1.
    pub(crate) fn geometric_ratio(&self) -> Option<f64> {
        let top = self.support_max();
        (top < 1.0).then_some(top)
    }
}

fn power_tail_moment(beta: f64, k: f64) -> f64 {
    let alpha = beta + 1.0;
    if beta == 0.0 {
        return 1.0 / (k + 1.0);
    }
    if beta > 0.0 && beta.fract() == 0.0 && beta <= 64.0 {
        // Γ(α + 1) / ((k + 1)(k + 2)⋯(k + α))
        let mut acc = 1.0;
        let mut i = 1.0;
        while i <= alpha {
            acc *= i / (k + i);
            i += 1.0;
        }
        return acc;
    }
    (ln_gamma(alpha + 1.0) - ln_gamma_ratio(k + 1.0, alpha)).exp()
}

impl fmt::Display for OverlapDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Uniform => write!(f, "uniform"),
            Family::PowerTail { beta } => write!(f, "powertail:beta={beta}"),
            Family::ScaledSupport { a, inner } => write!(f, "scaled:a={a},inner={inner}"),
        }
    }
}

impl FromStr for OverlapDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let parse_float = |key: &str, text: &str| -> Result<f64> {
            text.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad value for {key}: {text:?}")))
        };
        match name.trim() {
            "uniform" if args.is_empty() => Ok(Self::uniform()),
            "powertail" => {
                let value = args
                    .strip_prefix("beta=")
                    .ok_or_else(|| Error::config(format!("expected powertail:beta=<float>, got {s:?}")))?;
                Self::power_tail(parse_float("beta", value)?).map_err(|e| Error::config(e.to_string()))
            }
            "scaled" => {
                let (first, rest) = args
                    .split_once(',')
                    .ok_or_else(|| Error::config(format!("expected scaled:a=<float>,inner=<spec>, got {s:?}")))?;
                let a = first
                    .strip_prefix("a=")
                    .ok_or_else(|| Error::config(format!("missing a= in {s:?}")))?;
                let inner = rest
                    .strip_prefix("inner=")
                    .ok_or_else(|| Error::config(format!("missing inner= in {s:?}")))?;
                Self::scaled(parse_float("a", a)?, inner.parse()?).map_err(|e| Error::config(e.to_string()))
            }
            _ => Err(Error::config(format!("unknown distribution {s:?}"))),
        }
    }
}

impl Serialize for OverlapDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OverlapDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A realised vector of overlap probabilities, each in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OverlapVector(Vec<f64>);

impl OverlapVector {
    /// Validates every entry; an entry equal to 1 is a divergence.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        for &x in &p {
            if x == 1.0 {
                return Err(Error::divergence("an overlap equal to 1 is never ruled out"));
            }
            if !(0.0..1.0).contains(&x) {
                return Err(Error::domain(format!("overlap {x} outside [0, 1)")));
            }
        }
        Ok(Self(p))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

impl TryFrom<Vec<f64>> for OverlapVector {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<OverlapVector> for Vec<f64> {
    fn from(p: OverlapVector) -> Self {
        p.0
    }
}

impl FromStr for OverlapVector {
    type Err = Error;

    /// Comma-separated floats; the empty string is the empty vector.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let values = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::config(format!("bad overlap {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}
