//! Special functions and compensated accumulation.
//!
//! Log-gamma itself comes from `statrs`; this module adds a
//! cancellation-free log-gamma ratio for large arguments, exact binomial
//! coefficients and a Neumaier summator.

use std::ops::{Add, AddAssign};

// B_{2j} / (2j (2j - 1)) for j = 1..7.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

// Below this the Stirling tail is not accurate to machine precision.
const STIRLING_MIN: f64 = 20.0;

fn stirling_tail(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut acc = 0.0;
    for c in STIRLING {
        acc += c * pow;
        pow *= inv2;
    }
    acc
}

pub use statrs::function::gamma::{gamma, ln_gamma};

/// `ln[Γ(x + a) / (Γ(x) x^a)]`, which tends to 0 as `x → ∞`.
///
/// Evaluated without forming either log-gamma value, so the result keeps
/// full relative precision for very large `x`.
pub fn ln_gamma_ratio_scaled(x: f64, a: f64) -> f64 {
    debug_assert!(x > 0.0 && x + a > 0.0);
    if a == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < STIRLING_MIN || x + a < STIRLING_MIN {
        let shift = (STIRLING_MIN - x.min(x + a)).ceil();
        let mut correction = a * ((x + shift) / x).ln();
        let mut i = 0.0;
        while i < shift {
            correction += (x + i).ln() - (x + i + a).ln();
            i += 1.0;
        }
        return ln_gamma_ratio_scaled(x + shift, a) + correction;
    }
    // (x + a − ½)·ln(1 + t) − a with x·t = a, rearranged so that both
    // pieces are O(t)
    let t = a / x;
    x * ln_1p_minus_identity(t) + (a - 0.5) * t.ln_1p() + (stirling_tail(x + a) - stirling_tail(x))
}

/// `ln(1 + t) − t`, accurate for small `t`.
fn ln_1p_minus_identity(t: f64) -> f64 {
    if t.abs() >= 0.01 {
        return t.ln_1p() - t;
    }
    let mut acc = 0.0;
    let mut pow = t * t;
    let mut j = 2.0;
    while j < 40.0 {
        let term = pow / j;
        acc -= term;
        if term.abs() < 1e-18 * acc.abs() {
            break;
        }
        pow *= -t;
        j += 1.0;
    }
    acc
}

/// `ln[Γ(x + a) / Γ(x)]`.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    ln_gamma_ratio_scaled(x, a) + a * x.ln()
}

/// Binomial coefficient as a float; exact while the value fits in 2^53.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 60 {
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * u128::from(n - i) / u128::from(i + 1);
        }
        return acc as f64;
    }
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)).exp()
}

/// Kahan–Babuška–Neumaier compensated summator.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
    abs: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sum(&self) -> f64 {
        self.s + self.c
    }

    /// Sum of the absolute values of everything added so far.
    pub fn abs_sum(&self) -> f64 {
        self.abs
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        let t = self.s + rhs;
        if self.s.abs() >= rhs.abs() {
            self.c += (self.s - t) + rhs;
        } else {
            self.c += (rhs - t) + self.s;
        }
        self.s = t;
        self.abs += rhs.abs();
    }
}

impl Add<f64> for NeumaierSum {
    type Output = Self;

    fn add(mut self, rhs: f64) -> Self {
        self += rhs;
        self
    }
}

impl std::iter::Sum<f64> for NeumaierSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        iter.fold(NeumaierSum::new(), |acc, x| acc + x)
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().sum::<NeumaierSum>().sum()
}
