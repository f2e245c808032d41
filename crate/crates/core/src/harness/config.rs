//! Run configuration and its flat `key=value` file format.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{OverlapDistribution, OverlapVector};
use crate::ensemble::Method;
use crate::error::{Error, Result};
use crate::simulators::{Algorithm, RepickPolicy, DEFAULT_HORIZON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Zeta,
    ExactTime,
    Ndelta,
    Simulate,
    Ensemble,
    Extremes,
    Scaling,
    Compare,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Zeta,
        Command::ExactTime,
        Command::Ndelta,
        Command::Simulate,
        Command::Ensemble,
        Command::Extremes,
        Command::Scaling,
        Command::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Zeta => "zeta",
            Command::ExactTime => "exact-time",
            Command::Ndelta => "ndelta",
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::Extremes => "extremes",
            Command::Scaling => "scaling",
            Command::Compare => "compare",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config(format!("unknown format {s:?}; expected csv or json"))),
        }
    }
}

/// Parse a list of sizes: `100,1000,1e4` or `logspace:<lo>:<hi>:<count>`
/// for `count` points `10^lo … 10^hi`, rounded to integers.
pub fn parse_n_sweep(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(rest) = s.strip_prefix("logspace:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || Error::config(format!("expected logspace:<lo>:<hi>:<count>, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count < 2 || !(hi > lo) {
            return Err(bad());
        }
        return Ok((0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64).round() as usize)
            .collect());
    }
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| Error::config(format!("bad size {t:?}")))?;
            if v < 0.0 || v.fract() != 0.0 || v > 1e15 {
                return Err(Error::config(format!("size must be a non-negative integer, got {t:?}")));
            }
            Ok(v as usize)
        })
        .collect()
}

/// Every setting a command may read. Serializes to `key=value` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub dist: Option<OverlapDistribution>,
    pub n: Option<usize>,
    pub n_sweep: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    pub eps: f64,
    pub seed: u64,
    /// Argument of the moment zeta function.
    pub s: Option<f64>,
    pub method: Option<Method>,
    pub algorithm: Option<Algorithm>,
    pub policy: RepickPolicy,
    pub horizon: u64,
    /// Explicit overlap vector.
    pub p: Option<OverlapVector>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Record wall-clock time per point. Off by default so output is
    /// byte-stable.
    pub timing: bool,
    /// Emit per-trial values instead of a summary.
    pub dump: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            dist: None,
            n: None,
            n_sweep: Vec::new(),
            trials: 1000,
            delta: 0.1,
            eps: 1e-10,
            seed: 0,
            s: None,
            method: None,
            algorithm: None,
            policy: RepickPolicy::AllConcepts,
            horizon: DEFAULT_HORIZON,
            p: None,
            out: None,
            format: Format::Json,
            timing: false,
            dump: false,
        }
    }

    /// Sizes to run: the sweep if given, else the single `n`.
    pub fn sizes(&self) -> Vec<usize> {
        if !self.n_sweep.is_empty() {
            self.n_sweep.clone()
        } else {
            self.n.into_iter().collect()
        }
    }

    pub fn require_dist(&self) -> Result<&OverlapDistribution> {
        self.dist
            .as_ref()
            .ok_or_else(|| Error::config(format!("{} needs a distribution (dist=...)", self.command)))
    }

    pub fn require_n(&self) -> Result<usize> {
        self.n.ok_or_else(|| Error::config(format!("{} needs n", self.command)))
    }

    pub fn require_p(&self) -> Result<&OverlapVector> {
        self.p
            .as_ref()
            .ok_or_else(|| Error::config(format!("{} needs an overlap vector (p=...)", self.command)))
    }

    /// Check that the fields the command reads are present and sane.
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be positive"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        match self.command {
            Command::Zeta => {
                self.require_dist()?;
                if self.s.is_none() {
                    return Err(Error::config("zeta needs s"));
                }
            }
            Command::ExactTime | Command::Ndelta => {
                self.require_p()?;
            }
            Command::Simulate => {
                if self.algorithm.is_none() {
                    return Err(Error::config("simulate needs an algorithm"));
                }
                if self.p.is_none() {
                    self.require_dist()?;
                    self.require_n()?;
                } else if self.dist.is_none() && self.n.is_some_and(|n| Some(n) != self.p.as_ref().map(|p| p.len())) {
                    return Err(Error::config("n disagrees with the length of p"));
                }
            }
            Command::Ensemble => {
                self.require_dist()?;
                if self.sizes().is_empty() {
                    return Err(Error::config("ensemble needs n or n_sweep"));
                }
            }
            Command::Extremes => {
                self.require_dist()?;
                if self.sizes().is_empty() {
                    return Err(Error::config("extremes needs n_sweep"));
                }
            }
            Command::Scaling => {
                self.require_dist()?;
                let ns = &self.n_sweep;
                if ns.len() < 4 {
                    return Err(Error::config(format!("scaling needs at least 4 sizes, got {}", ns.len())));
                }
                if ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
                    return Err(Error::config("n_sweep must be positive and strictly increasing"));
                }
                if (ns[ns.len() - 1] as f64 / ns[0] as f64) < 100.0 {
                    return Err(Error::config("n_sweep must span at least two decades"));
                }
            }
            Command::Compare => {
                self.require_dist()?;
                if self.sizes().is_empty() {
                    return Err(Error::config("compare needs n or n_sweep"));
                }
            }
        }
        Ok(())
    }

    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.trim().parse().map_err(|_| Error::config(format!("bad value for {key}: {value:?}")))
        }
        let value = value.trim();
        match key.trim() {
            "command" => self.command = value.parse()?,
            "dist" => self.dist = Some(value.parse()?),
            "n" => self.n = Some(num(key, value)?),
            "n_sweep" => self.n_sweep = parse_n_sweep(value)?,
            "trials" => self.trials = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "s" => self.s = Some(num(key, value)?),
            "method" => self.method = Some(value.parse()?),
            "algorithm" => self.algorithm = Some(value.parse()?),
            "policy" => self.policy = value.parse()?,
            "horizon" => self.horizon = num(key, value)?,
            "p" => self.p = Some(value.parse().map_err(|e: Error| Error::config(e.to_string()))?),
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "timing" => self.timing = num(key, value)?,
            "dump" => self.dump = num(key, value)?,
            other => return Err(Error::config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in file order; unset optional fields are left out.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let join = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(",");
        let mut out = vec![("command", self.command.to_string())];
        if let Some(d) = &self.dist {
            out.push(("dist", d.to_string()));
        }
        if let Some(n) = self.n {
            out.push(("n", n.to_string()));
        }
        if !self.n_sweep.is_empty() {
            out.push(("n_sweep", join(&mut self.n_sweep.iter().map(|n| n.to_string()))));
        }
        out.push(("trials", self.trials.to_string()));
        out.push(("delta", self.delta.to_string()));
        out.push(("eps", self.eps.to_string()));
        out.push(("seed", self.seed.to_string()));
        if let Some(s) = self.s {
            out.push(("s", s.to_string()));
        }
        if let Some(m) = self.method {
            out.push(("method", m.to_string()));
        }
        if let Some(a) = self.algorithm {
            out.push(("algorithm", a.to_string()));
        }
        out.push(("policy", self.policy.to_string()));
        out.push(("horizon", self.horizon.to_string()));
        if let Some(p) = &self.p {
            out.push(("p", join(&mut p.iter().map(|x| x.to_string()))));
        }
        if let Some(o) = &self.out {
            out.push(("out", o.display().to_string()));
        }
        out.push(("format", self.format.to_string()));
        out.push(("timing", self.timing.to_string()));
        out.push(("dump", self.dump.to_string()));
        out
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    /// Blank lines and `#` comments are ignored. `command` may be omitted
    /// when the caller sets it afterwards; it defaults to `scaling`.
    fn from_str(s: &str) -> Result<Self> {
        let mut config = RunConfig::new(Command::Scaling);
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            config.set(k, v)?;
        }
        Ok(config)
    }
}
