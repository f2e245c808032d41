//! Numerical laboratory for the convergence of batch concept learning.
//!
//! A target concept competes with `n` wrong concepts whose overlaps with it
//! are i.i.d. draws from an overlap distribution. The crate computes exact
//! and asymptotic expected learning times, the moment zeta function of the
//! overlap law, extreme-value statistics of the overlaps, and Monte Carlo
//! simulations of three learners, plus a harness for scaling experiments.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch_exact;
pub mod distributions;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod moment_zeta;
pub mod quadrature;
pub mod simulators;
pub mod special;
pub mod stats;
pub mod streams;
