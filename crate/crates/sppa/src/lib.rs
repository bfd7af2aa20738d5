//! Stochastic proximal point method over Hadamard spaces.
//!
//! The crate has five layers:
//!
//! * [`geometry`] — concrete Hadamard spaces (Euclidean, hyperboloid,
//!   spider trees, l² products) with exact distances and geodesics;
//! * [`integrand`] — sampleable convex objective families `f(e, ·)` with
//!   event distributions, growth data, and closed-form proximal maps;
//! * [`schedule`], [`engine`], [`trace`] — step-size schedules with
//!   divergence/square-summability validation, the stochastic proximal
//!   point iteration and its random-order splitting variant, seeded
//!   replica ensembles, CSV traces and JSON manifests;
//! * [`diagnostics`] — empirical certification of the inequalities the
//!   convergence analysis rests on (quasi-Fejér monotonicity, proximal
//!   inequality, step bounds, summability, boundedness moduli) plus
//!   standalone simulators for the probabilistic lemmas;
//! * [`baseline`], [`config`], [`experiment`] — reference solvers,
//!   experiment configuration, and orchestration used by the `sppa` binary.
//!
//! Start with the runnable examples (`cargo run --release --example
//! frechet_mean`) for end-to-end usage.

// `!(x > 0.0)` deliberately rejects NaN parameters, which `x <= 0.0` admits.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod config;
pub mod diagnostics;
pub mod engine;
pub mod experiment;
pub mod geometry;
pub mod integrand;
pub mod rng;
pub mod schedule;
mod search;
pub mod trace;

pub use geometry::{Point, Space};
pub use integrand::{Event, EventSpace, Integrand};
pub use schedule::StepSchedule;
