//! Experiment orchestration: configuration, sweeps, comparisons, output.

pub mod compare;
pub mod config;
pub mod execute;
pub mod output;
pub mod scaling;

pub use compare::{compare_algorithms, ComparisonRow, ComparisonTable};
pub use config::{parse_n_sweep, Command, Format, RunConfig};
pub use output::{fmt_float, json_document, write_output, Csv, SCHEMA_VERSION};
pub use scaling::{fit_exponent, run_scaling, CiKind, ScalingPoint, ScalingReport};
