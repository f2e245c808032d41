//! Run a validated [`RunConfig`] and render its output.

use std::time::Instant;

use serde::Serialize;

use super::compare::compare_algorithms;
use super::config::{Command, Format, RunConfig};
use super::output::{fmt_float, fmt_opt_float, json_document, Csv, SCHEMA_VERSION};
use super::scaling::{default_method, run_scaling};
use crate::batch_exact::{coarse_bounds, expected_time_series, expected_time_subsets, n_delta, MAX_SUBSET_LEN};
use crate::ensemble::{estimate, extreme_value, extreme_value_sweep, EnsembleEstimate, ExtremeValueSweep};
use crate::error::Result;
use crate::moment_zeta::zeta;
use crate::simulators::{run_trials, SimulationConfig, TrialSummary};
use crate::streams::derive;

/// Rendered output of one command, plus any warnings for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub body: String,
    pub warnings: Vec<String>,
}

impl Rendered {
    fn plain(body: String) -> Self {
        Self { body, warnings: Vec::new() }
    }
}

fn render<T: Serialize>(config: &RunConfig, kind: &str, result: &T, csv: impl FnOnce() -> Csv) -> Result<String> {
    match config.format {
        Format::Json => json_document(kind, config, result),
        Format::Csv => Ok(csv().render()),
    }
}

#[derive(Serialize)]
struct ExactTimeResult {
    n: usize,
    t: f64,
    steps_expectation: f64,
    error_bound: f64,
    subsets: Option<f64>,
    coarse_upper: f64,
    coarse_lower: f64,
}

#[derive(Serialize)]
struct SimulateResult {
    summary: TrialSummary,
    delta: f64,
    n_delta: Option<u64>,
    n_delta_error: Option<String>,
}

#[derive(Serialize)]
struct EnsembleRow {
    #[serde(flatten)]
    estimate: EnsembleEstimate,
    runtime_seconds: Option<f64>,
}

pub fn execute(config: &RunConfig) -> Result<Rendered> {
    config.validate()?;
    match config.command {
        Command::Zeta => {
            let dist = config.require_dist()?;
            let s = config.s.expect("validated");
            let v = zeta(dist, s, config.eps)?;
            render(config, "zeta", &v, || {
                let mut csv = Csv::new(&["dist", "s", "value", "error_bound", "terms"]);
                csv.push(vec![dist.to_string(), fmt_float(s), fmt_float(v.value), fmt_float(v.error_bound), v.terms.to_string()]);
                csv
            })
            .map(Rendered::plain)
        }
        Command::ExactTime => {
            let p = config.require_p()?;
            let t = expected_time_series(p, config.eps)?;
            let subsets = if p.len() <= MAX_SUBSET_LEN.min(20) { Some(expected_time_subsets(p)?) } else { None };
            let (upper, lower) = coarse_bounds(p);
            let result = ExactTimeResult {
                n: p.len(),
                t: t.t,
                steps_expectation: t.steps_expectation,
                error_bound: t.error_bound,
                subsets,
                coarse_upper: upper,
                coarse_lower: lower,
            };
            render(config, "exact_time", &result, || {
                let mut csv = Csv::new(&["n", "t", "steps_expectation", "error_bound", "subsets", "coarse_upper", "coarse_lower"]);
                csv.push(vec![
                    result.n.to_string(),
                    fmt_float(result.t),
                    fmt_float(result.steps_expectation),
                    fmt_float(result.error_bound),
                    fmt_opt_float(result.subsets),
                    fmt_float(upper),
                    fmt_float(lower),
                ]);
                csv
            })
            .map(Rendered::plain)
        }
        Command::Ndelta => {
            let p = config.require_p()?;
            let k = n_delta(p, config.delta)?;
            #[derive(Serialize)]
            struct R {
                delta: f64,
                n_delta: u64,
            }
            render(config, "ndelta", &R { delta: config.delta, n_delta: k }, || {
                let mut csv = Csv::new(&["delta", "n_delta"]);
                csv.push(vec![fmt_float(config.delta), k.to_string()]);
                csv
            })
            .map(Rendered::plain)
        }
        Command::Simulate => {
            let algorithm = config.algorithm.expect("validated");
            let dist = config.dist.clone().unwrap_or_else(crate::distributions::OverlapDistribution::uniform);
            let n = match &config.p {
                Some(p) => p.len(),
                None => config.require_n()?,
            };
            let mut sim = SimulationConfig::new(algorithm, dist, n, config.trials, config.seed);
            sim.fixed_p = config.p.clone();
            sim.policy = config.policy;
            sim.horizon = config.horizon;
            let batch = run_trials(&sim)?;
            if config.dump {
                return render(config, "trials", &batch, || {
                    let mut csv = Csv::new(&["trial", "time"]);
                    for (i, t) in batch.times.iter().enumerate() {
                        csv.push(vec![i.to_string(), t.map(|t| t.to_string()).unwrap_or_else(|| "censored".into())]);
                    }
                    csv
                })
                .map(Rendered::plain);
            }
            let summary = batch.summary();
            let (nd, nd_err) = match batch.n_delta(config.delta) {
                Ok(k) => (Some(k), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let result = SimulateResult { summary, delta: config.delta, n_delta: nd, n_delta_error: nd_err.clone() };
            let body = render(config, "simulate", &result, || {
                let mut csv = Csv::new(&["algorithm", "n", "trials", "censored", "mean", "stderr", "median", "delta", "n_delta"]);
                csv.push(vec![
                    algorithm.to_string(),
                    n.to_string(),
                    summary.trials.to_string(),
                    summary.censored.to_string(),
                    fmt_float(summary.mean),
                    fmt_float(summary.stderr),
                    fmt_float(summary.median),
                    fmt_float(config.delta),
                    nd.map(|k| k.to_string()).unwrap_or_default(),
                ]);
                csv
            })?;
            Ok(Rendered { body, warnings: nd_err.into_iter().collect() })
        }
        Command::Ensemble => {
            let dist = config.require_dist()?;
            let method = config.method.unwrap_or_else(|| default_method(dist));
            let rows = config
                .sizes()
                .into_iter()
                .enumerate()
                .map(|(i, n)| {
                    let start = Instant::now();
                    let estimate = estimate(dist, n, method, config.eps, config.trials, derive(config.seed, i as u64))?;
                    let runtime_seconds = config.timing.then(|| start.elapsed().as_secs_f64());
                    Ok(EnsembleRow { estimate, runtime_seconds })
                })
                .collect::<Result<Vec<_>>>()?;
            render(config, "ensemble", &rows, || {
                let mut header = vec!["n", "method", "value", "error"];
                if config.timing {
                    header.push("runtime_seconds");
                }
                let mut csv = Csv::new(&header);
                for r in &rows {
                    let e = &r.estimate;
                    let mut row = vec![e.n.to_string(), e.method.to_string(), fmt_float(e.value), fmt_opt_float(e.error_bound)];
                    if config.timing {
                        row.push(fmt_opt_float(r.runtime_seconds));
                    }
                    csv.push(row);
                }
                csv
            })
            .map(Rendered::plain)
        }
        Command::Extremes => {
            let dist = config.require_dist()?;
            let sizes = config.sizes();
            let sweep = if sizes.len() >= 2 {
                extreme_value_sweep(dist, &sizes, config.trials, config.seed)?
            } else {
                let point = extreme_value(dist, sizes[0], config.trials, derive(config.seed, 0))?;
                ExtremeValueSweep {
                    points: vec![point],
                    slope: f64::NAN,
                    fitted_c: f64::NAN,
                    c_proof_form: None,
                    c_limit_form: None,
                }
            };
            let mut warnings = Vec::new();
            if let Some(form) = sweep.closer_form() {
                warnings.push(format!("fitted constant is closer to the {form} form"));
            }
            let body = render(config, "extremes", &sweep, || {
                let mut csv = Csv::new(&["n", "mean_min_gap", "stderr", "exact_mean", "ks_distance"]);
                csv.meta("schema_version", SCHEMA_VERSION.to_string());
                csv.meta("slope", fmt_float(sweep.slope));
                csv.meta("fitted_c", fmt_float(sweep.fitted_c));
                csv.meta("c_proof_form", fmt_opt_float(sweep.c_proof_form));
                csv.meta("c_limit_form", fmt_opt_float(sweep.c_limit_form));
                for p in &sweep.points {
                    csv.push(vec![
                        p.n.to_string(),
                        fmt_float(p.mean_min_gap),
                        fmt_float(p.stderr),
                        fmt_opt_float(p.exact_mean),
                        fmt_float(p.ks_distance),
                    ]);
                }
                csv
            })?;
            Ok(Rendered { body, warnings })
        }
        Command::Scaling => {
            let report = run_scaling(config)?;
            let mut warnings = Vec::new();
            if let Some(p) = report.points.iter().find(|p| p.discarded) {
                warnings.push(format!("n = {} left out of the fit as pre-asymptotic", p.n));
            }
            let body = match config.format {
                Format::Json => json_document("scaling", config, &report)?,
                Format::Csv => report.to_csv(),
            };
            Ok(Rendered { body, warnings })
        }
        Command::Compare => {
            let table = compare_algorithms(config)?;
            let body = match config.format {
                Format::Json => json_document("compare", config, &table)?,
                Format::Csv => table.to_csv(),
            };
            Ok(Rendered { body, warnings: table.violations.clone() })
        }
    }
}
