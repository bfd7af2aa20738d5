//! The stochastic proximal point iteration, its random-order splitting
//! variant, and seeded replica ensembles.
//!
//! One run computes `x_{n+1} = prox_{λ_n}(ξ_{n+1}, x_n)` for `n = 0 … N−1`
//! with `ξ_{n+1}` drawn i.i.d. from the integrand's event distribution. The
//! run is a pure function of its [`RunConfig`]: events come from a stream
//! seeded by the run seed, function-value estimates from an independently
//! derived stream, so traces are bit-reproducible.
//!
//! Every transition records the realized step `d(x_{n+1}, x_n)` together
//! with its bound `2 λ_n L(ξ_{n+1}) (1 + d(x_n, p))`; the bound holds on
//! every row of a correct run and the trace keeps both so violations are
//! detectable after the fact.
//!
//! Almost-sure statements are approximated by replica ensembles: replica 0
//! runs the base seed, replica `r > 0` the seed derived by
//! [`crate::rng::derive_seed`]. Replicas are embarrassingly parallel and the
//! result is independent of execution order.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{GeometryError, Point};
use crate::integrand::{Integrand, IntegrandError};
use crate::rng::{derive_seed, stream_from_seed};
use crate::schedule::{ScheduleVerdict, StepSchedule};
use crate::trace::{ReplicaEnsemble, RunTrace};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

type Result<T> = std::result::Result<T, EngineError>;

/// Default iterate storage stride.
pub const DEFAULT_TRACE_STRIDE: u64 = 100;

/// Everything one run depends on.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub integrand: Integrand,
    pub x0: Point,
    pub schedule: StepSchedule,
    pub iterations: u64,
    pub seed: u64,
    /// Iterates are stored every this many steps (scalars every step).
    pub trace_stride: u64,
    /// Optional known reference point `z` (e.g. a minimizer) for distance
    /// tracking.
    pub reference: Option<Point>,
    /// Sample count for Monte Carlo function-value estimates; ignored by
    /// finite event spaces, which are evaluated exactly.
    pub big_f_samples: u32,
}

impl RunConfig {
    pub fn new(integrand: Integrand, x0: Point, schedule: StepSchedule) -> RunConfig {
        RunConfig {
            integrand,
            x0,
            schedule,
            iterations: 1000,
            seed: 0,
            trace_stride: DEFAULT_TRACE_STRIDE,
            reference: None,
            big_f_samples: 1000,
        }
    }

    pub fn with_iterations(mut self, n: u64) -> RunConfig {
        self.iterations = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.seed = seed;
        self
    }

    pub fn with_reference(mut self, z: Point) -> RunConfig {
        self.reference = Some(z);
        self
    }

    pub fn with_trace_stride(mut self, stride: u64) -> RunConfig {
        self.trace_stride = stride;
        self
    }

    pub fn with_big_f_samples(mut self, samples: u32) -> RunConfig {
        self.big_f_samples = samples;
        self
    }

    fn validate(&self) -> Result<()> {
        if let ScheduleVerdict::Reject { reason } = self.schedule.validate() {
            return Err(EngineError::Config(format!("schedule rejected: {reason}")));
        }
        if self.trace_stride == 0 {
            return Err(EngineError::Config("trace_stride must be >= 1".into()));
        }
        if self.big_f_samples == 0 {
            return Err(EngineError::Config("big_f_samples must be >= 1".into()));
        }
        let space = self.integrand.space();
        space.validate(&self.x0).map_err(|e| EngineError::Config(format!("x0: {e}")))?;
        if let Some(z) = &self.reference {
            space.validate(z).map_err(|e| EngineError::Config(format!("reference: {e}")))?;
        }
        Ok(())
    }
}

/// Run the stochastic proximal point iteration.
pub fn run_sppa(cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    run_replica(cfg, 0, cfg.seed)
}

/// Run the random-order splitting iteration: the integrand must be a finite
/// sum and the component distribution uniform, as the splitting analysis
/// requires.
pub fn run_splitting(cfg: &RunConfig) -> Result<RunTrace> {
    ensure_splitting(cfg)?;
    run_sppa(cfg)
}

fn ensure_splitting(cfg: &RunConfig) -> Result<()> {
    if cfg.integrand.components().is_none() {
        return Err(EngineError::Config(
            "splitting requires a finite-sum integrand".into(),
        ));
    }
    if !cfg.integrand.events().is_uniform() {
        return Err(EngineError::Config(
            "splitting requires uniform component draws".into(),
        ));
    }
    Ok(())
}

/// Run `replicas` independent copies with seeds derived from `cfg.seed`
/// (replica 0 keeps the base seed). Replicas execute in parallel; the
/// ensemble is ordered by replica index regardless of scheduling.
pub fn run_ensemble(cfg: &RunConfig, replicas: u32) -> Result<ReplicaEnsemble> {
    if replicas == 0 {
        return Err(EngineError::Config("ensemble needs >= 1 replica".into()));
    }
    cfg.validate()?;
    let traces: Vec<RunTrace> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(cfg.seed, r);
            run_replica(cfg, r, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicaEnsemble { traces })
}

/// Splitting-variant ensemble; same uniformity requirements as
/// [`run_splitting`].
pub fn run_splitting_ensemble(cfg: &RunConfig, replicas: u32) -> Result<ReplicaEnsemble> {
    ensure_splitting(cfg)?;
    run_ensemble(cfg, replicas)
}

/// Seed of replica `r`: the base seed for replica 0, derived otherwise.
pub fn replica_seed(master: u64, r: u32) -> u64 {
    if r == 0 {
        master
    } else {
        derive_seed(master, r as u64)
    }
}

fn run_replica(cfg: &RunConfig, replica: u32, seed: u64) -> Result<RunTrace> {
    let g = &cfg.integrand;
    let space = g.space();
    let n_steps = cfg.iterations;

    // Event draws and F estimates use independent derived streams so the
    // iterate path does not depend on big_f_samples.
    let mut event_stream = stream_from_seed(derive_seed(seed, 0));
    let mut f_stream = stream_from_seed(derive_seed(seed, 1));

    let cap = n_steps as usize;
    let mut trace = RunTrace {
        replica,
        lambda: Vec::with_capacity(cap),
        event: Vec::with_capacity(cap),
        step_len: Vec::with_capacity(cap),
        step_bound: Vec::with_capacity(cap),
        growth_drawn: Vec::with_capacity(cap),
        dist_ref: cfg.reference.as_ref().map(|_| Vec::with_capacity(cap + 1)),
        dist_base: Vec::with_capacity(cap + 1),
        f_hat: Vec::with_capacity(cap + 1),
        f_se: Vec::with_capacity(cap + 1),
        stored_iterates: Vec::new(),
        final_iterate: cfg.x0.clone(),
    };

    let mut x = cfg.x0.clone();
    for n in 0..n_steps {
        record_state(cfg, &mut trace, &x, &mut f_stream)?;
        if n.is_multiple_of(cfg.trace_stride) {
            trace.stored_iterates.push((n, x.clone()));
        }

        let lambda = cfg.schedule.lambda(n);
        let event = g.sample_event(&mut event_stream);
        let next = g.prox(lambda, &event, &x)?;

        let step_len = space.distance_unchecked(&next, &x);
        let growth = g.growth_of(&event)?;
        let dist_base = *trace.dist_base.last().expect("state recorded above");
        trace.lambda.push(lambda);
        trace.event.push(event.describe(space));
        trace.step_len.push(step_len);
        trace.step_bound.push(2.0 * lambda * growth * (1.0 + dist_base));
        trace.growth_drawn.push(growth);
        x = next;
    }
    record_state(cfg, &mut trace, &x, &mut f_stream)?;
    if n_steps.is_multiple_of(cfg.trace_stride) || n_steps == 0 {
        trace.stored_iterates.push((n_steps, x.clone()));
    }
    trace.final_iterate = x;
    Ok(trace)
}

fn record_state(
    cfg: &RunConfig,
    trace: &mut RunTrace,
    x: &Point,
    f_stream: &mut crate::rng::Stream,
) -> Result<()> {
    let g = &cfg.integrand;
    let space = g.space();
    if let (Some(col), Some(z)) = (trace.dist_ref.as_mut(), cfg.reference.as_ref()) {
        col.push(space.distance_unchecked(x, z));
    }
    trace.dist_base.push(space.distance_unchecked(x, g.base_point()));
    let (f_hat, f_se) = g.big_f(x, cfg.big_f_samples, f_stream)?;
    trace.f_hat.push(f_hat);
    trace.f_se.push(f_se);
    Ok(())
}
