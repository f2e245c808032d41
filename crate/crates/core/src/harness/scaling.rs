//! Expected time across an `n` sweep and the fitted log-log exponent.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output::{fmt_float, fmt_opt_float, parse_float, parse_opt_float, Csv, SCHEMA_VERSION};
use crate::distributions::OverlapDistribution;
use crate::ensemble::{estimate, sample_expected_times, Method};
use crate::error::{Error, Result};
use crate::stats::{ols, quantile_sorted, sort_floats, LineFit};
use crate::streams::{derive, tag, trial_rng};

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Residual floor relative to the data scale, so exact power laws do not
/// trigger the discard rule on rounding noise.
const RMSE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiKind {
    /// Percentile interval over resampled Monte Carlo trials.
    Bootstrap,
    /// Range of the fits leaving out one size at a time.
    LeaveOneOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub value: f64,
    pub error: Option<f64>,
    /// Left out of the fit as a pre-asymptotic point.
    pub discarded: bool,
    pub runtime_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub dist: OverlapDistribution,
    pub method: Method,
    pub points: Vec<ScalingPoint>,
    pub fitted_exponent: f64,
    pub exponent_ci: (f64, f64),
    pub ci_kind: CiKind,
}

/// Log-log fit of `values` against `ns`, with the smallest size dropped
/// when its leave-one-out residual exceeds three times the fit RMSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub fit: LineFit,
    pub discarded_first: bool,
}

fn log_points(ns: &[usize], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (ns.iter().map(|&n| (n as f64).ln()).collect(), values.iter().map(|v| v.ln()).collect())
}

pub fn fit_exponent(ns: &[usize], values: &[f64]) -> Result<ExponentFit> {
    if ns.len() < 2 || ns.len() != values.len() {
        return Err(Error::config("exponent fit needs at least two matching points"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::domain("exponent fit needs finite positive values"));
    }
    let (xs, ys) = log_points(ns, values);
    let full = ols(&xs, &ys);
    if xs.len() >= 4 {
        let rest = ols(&xs[1..], &ys[1..]);
        let residual = ys[0] - (rest.intercept + rest.slope * xs[0]);
        let scale = ys.iter().fold(1.0f64, |a, y| a.max(y.abs()));
        if residual.abs() > 3.0 * full.rmse.max(RMSE_FLOOR * scale) {
            return Ok(ExponentFit { fit: rest, discarded_first: true });
        }
    }
    Ok(ExponentFit { fit: full, discarded_first: false })
}

fn leave_one_out_interval(ns: &[usize], values: &[f64], slope: f64) -> (f64, f64) {
    let (xs, ys) = log_points(ns, values);
    let mut lo = slope;
    let mut hi = slope;
    if xs.len() >= 3 {
        for skip in 0..xs.len() {
            let x: Vec<f64> = xs.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, v)| *v).collect();
            let y: Vec<f64> = ys.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, v)| *v).collect();
            let s = ols(&x, &y).slope;
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    (lo, hi)
}

/// Method used when the config does not name one: the moment series when
/// `E[T]` exists, otherwise the Monte Carlo median.
pub fn default_method(dist: &OverlapDistribution) -> Method {
    match dist.tail_parameters() {
        Ok(t) if t.alpha <= 1.0 => Method::MonteCarlo,
        _ => Method::MomentSeries,
    }
}

pub fn run_scaling(config: &RunConfig) -> Result<ScalingReport> {
    config.validate()?;
    let dist = config.require_dist()?.clone();
    let method = config.method.unwrap_or_else(|| default_method(&dist));
    let ns = config.n_sweep.clone();

    let mut points = Vec::with_capacity(ns.len());
    // sorted per-trial samples, kept for the bootstrap
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let start = Instant::now();
        let point_seed = derive(config.seed, i as u64);
        let (value, error) = if method == Method::MonteCarlo {
            let mut times = sample_expected_times(&dist, n, config.trials, point_seed);
            sort_floats(&mut times);
            let med = quantile_sorted(&times, 0.5);
            samples.push(times);
            (med, None)
        } else {
            let e = estimate(&dist, n, method, config.eps, config.trials, point_seed)?;
            (e.value, e.error_bound)
        };
        let runtime_seconds = config.timing.then(|| start.elapsed().as_secs_f64());
        points.push(ScalingPoint { n, value, error, discarded: false, runtime_seconds });
    }

    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let fit = fit_exponent(&ns, &values)?;
    let first = usize::from(fit.discarded_first);
    points[0].discarded = fit.discarded_first;
    let slope = fit.fit.slope;

    let (ci, ci_kind) = if method == Method::MonteCarlo {
        let kept_ns = &ns[first..];
        let kept = &samples[first..];
        let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        let mut medians = vec![Vec::with_capacity(BOOTSTRAP_RESAMPLES); ns.len()];
        for b in 0..BOOTSTRAP_RESAMPLES {
            let mut rng = trial_rng(config.seed, tag::BOOTSTRAP, b as u64);
            let mut resampled_all = Vec::with_capacity(ns.len());
            for (j, s) in samples.iter().enumerate() {
                let mut r: Vec<f64> = (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).collect();
                sort_floats(&mut r);
                let m = quantile_sorted(&r, 0.5);
                medians[j].push(m);
                resampled_all.push(m);
            }
            let (xs, ys) = log_points(kept_ns, &resampled_all[first..]);
            slopes.push(ols(&xs, &ys).slope);
        }
        debug_assert_eq!(kept.len(), kept_ns.len());
        for (p, m) in points.iter_mut().zip(&medians) {
            let mean = m.iter().sum::<f64>() / m.len() as f64;
            let var = m.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m.len() - 1) as f64;
            p.error = Some(var.sqrt());
        }
        sort_floats(&mut slopes);
        let lo = quantile_sorted(&slopes, 0.025).min(slope);
        let hi = quantile_sorted(&slopes, 0.975).max(slope);
        ((lo, hi), CiKind::Bootstrap)
    } else {
        (leave_one_out_interval(&ns[first..], &values[first..], slope), CiKind::LeaveOneOut)
    };

    Ok(ScalingReport { dist, method, points, fitted_exponent: slope, exponent_ci: ci, ci_kind })
}

impl ScalingReport {
    pub fn n_values(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.n).collect()
    }

    pub fn to_csv(&self) -> String {
        let timing = self.points.iter().any(|p| p.runtime_seconds.is_some());
        let mut header = vec!["n", "value", "error", "discarded"];
        if timing {
            header.push("runtime_seconds");
        }
        let mut csv = Csv::new(&header);
        if !self.points.is_empty() {
            csv.meta("schema_version", SCHEMA_VERSION.to_string());
            csv.meta("dist", self.dist.to_string());
            csv.meta("method", self.method.to_string());
            csv.meta("fitted_exponent", fmt_float(self.fitted_exponent));
            csv.meta("exponent_ci_low", fmt_float(self.exponent_ci.0));
            csv.meta("exponent_ci_high", fmt_float(self.exponent_ci.1));
            csv.meta(
                "ci_kind",
                match self.ci_kind {
                    CiKind::Bootstrap => "bootstrap",
                    CiKind::LeaveOneOut => "leave_one_out",
                },
            );
        }
        for p in &self.points {
            let mut row = vec![p.n.to_string(), fmt_float(p.value), fmt_opt_float(p.error), p.discarded.to_string()];
            if timing {
                row.push(fmt_opt_float(p.runtime_seconds));
            }
            csv.push(row);
        }
        csv.render()
    }

    /// Inverse of [`to_csv`](Self::to_csv) for non-empty reports.
    pub fn from_csv(text: &str) -> Result<Self> {
        let csv = Csv::parse(text)?;
        let (n, value, error, discarded) =
            (csv.column("n")?, csv.column("value")?, csv.column("error")?, csv.column("discarded")?);
        let runtime = csv.column("runtime_seconds").ok();
        let points = csv
            .rows
            .iter()
            .map(|r| {
                Ok(ScalingPoint {
                    n: r[n].parse().map_err(|_| Error::config(format!("bad n {:?}", r[n])))?,
                    value: parse_float(&r[value])?,
                    error: parse_opt_float(&r[error])?,
                    discarded: r[discarded].parse().map_err(|_| Error::config("bad discarded flag"))?,
                    runtime_seconds: match runtime {
                        Some(c) => parse_opt_float(&r[c])?,
                        None => None,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalingReport {
            dist: csv.get_meta("dist")?.parse()?,
            method: csv.get_meta("method")?.parse()?,
            points,
            fitted_exponent: parse_float(csv.get_meta("fitted_exponent")?)?,
            exponent_ci: (
                parse_float(csv.get_meta("exponent_ci_low")?)?,
                parse_float(csv.get_meta("exponent_ci_high")?)?,
            ),
            ci_kind: match csv.get_meta("ci_kind")? {
                "bootstrap" => CiKind::Bootstrap,
                "leave_one_out" => CiKind::LeaveOneOut,
                other => return Err(Error::config(format!("unknown ci_kind {other:?}"))),
            },
        })
    }

    /// Read the `result` of a JSON document written by the harness.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            schema_version: u32,
            result: ScalingReport,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::config(format!("bad scaling JSON: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!("unsupported schema version {}", doc.schema_version)));
        }
        Ok(doc.result)
    }
}
