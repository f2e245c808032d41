use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use batchlab::error::{Error, Result};
use batchlab::harness::execute::execute;
use batchlab::harness::{write_output, Command, RunConfig};

#[derive(Parser)]
#[command(name = "batchlab", version, about = "Expected learning times, moment zeta values and learner simulations")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// key=value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall-clock time per point.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Default)]
struct Common {
    /// Overlap distribution: uniform, powertail:beta=<b>, scaled:a=<a>,inner=<spec>.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Sizes: 100,1000,... or logspace:<lo>:<hi>:<count>.
    #[arg(long)]
    n_sweep: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Moment zeta function of a distribution.
    Zeta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        s: Option<String>,
    },
    /// Exact expected time of a fixed overlap vector.
    ExactTime {
        #[command(flatten)]
        common: Common,
        /// Comma-separated overlaps.
        #[arg(long)]
        p: Option<String>,
    },
    /// Words needed to learn with probability 1 − delta for a fixed vector.
    Ndelta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: Option<String>,
    },
    /// Monte Carlo runs of one learner.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// batch, memoryless or full_memory.
        #[arg(long)]
        alg: Option<String>,
        /// Use this overlap vector in every trial.
        #[arg(long)]
        fixed_p: Option<String>,
        /// all_concepts or exclude_current.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        horizon: Option<String>,
        /// Emit per-trial times.
        #[arg(long)]
        dump: bool,
    },
    /// Expected time under a distribution by one method.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// zeta_sum, moment_series, integral_asymptotic or monte_carlo.
        #[arg(long)]
        method: Option<String>,
    },
    /// Smallest-gap statistics over a size sweep.
    Extremes {
        #[command(flatten)]
        common: Common,
    },
    /// Expected time across a sweep with a fitted exponent.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Option<String>,
    },
    /// Empirical N_delta of all three learners.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        horizon: Option<String>,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            text.parse::<RunConfig>()?
        }
        None => RunConfig::new(Command::Scaling),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    let mut push = |key: &'static str, value: &Option<String>| {
        if let Some(v) = value {
            overrides.push((key, v.clone()));
        }
    };
    let (command, common) = match &cli.command {
        Sub::Zeta { common, s } => {
            push("s", s);
            (Command::Zeta, common)
        }
        Sub::ExactTime { common, p } => {
            push("p", p);
            (Command::ExactTime, common)
        }
        Sub::Ndelta { common, p } => {
            push("p", p);
            (Command::Ndelta, common)
        }
        Sub::Simulate { common, alg, fixed_p, policy, horizon, dump } => {
            push("algorithm", alg);
            push("p", fixed_p);
            push("policy", policy);
            push("horizon", horizon);
            if *dump {
                overrides.push(("dump", "true".into()));
            }
            (Command::Simulate, common)
        }
        Sub::Ensemble { common, method } => {
            push("method", method);
            (Command::Ensemble, common)
        }
        Sub::Extremes { common } => (Command::Extremes, common),
        Sub::Scaling { common, method } => {
            push("method", method);
            (Command::Scaling, common)
        }
        Sub::Compare { common, policy, horizon } => {
            push("policy", policy);
            push("horizon", horizon);
            (Command::Compare, common)
        }
    };
    config.command = command;
    for (key, value) in [
        ("dist", &common.dist),
        ("n", &common.n),
        ("n_sweep", &common.n_sweep),
        ("trials", &common.trials),
        ("delta", &common.delta),
        ("eps", &common.eps),
        ("format", &cli.format),
    ] {
        if let Some(v) = value {
            overrides.push((key, v.clone()));
        }
    }
    if let Some(seed) = cli.seed {
        overrides.push(("seed", seed.to_string()));
    }
    if let Some(out) = &cli.out {
        overrides.push(("out", out.display().to_string()));
    }
    if cli.timing {
        overrides.push(("timing", "true".into()));
    }
    for (key, value) in overrides {
        config.set(key, &value)?;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = build_config(&cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rendered = pool.install(|| execute(&config))?;
    for w in &rendered.warnings {
        eprintln!("warning: {w}");
    }
    write_output(config.out.as_deref(), &rendered.body)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
