//! Step-size schedules `(λ_n)` and their admissibility check.
//!
//! The iteration needs steps whose sum diverges while the sum of squares
//! converges (the Robbins–Monro step conditions). For the power family
//! `λ_n = c (n + n0)^{−p}` this holds exactly for `p ∈ (1/2, 1]`, so the
//! validator decides analytically. Explicit finite lists are accepted only
//! when they carry a tail rule reducible to an accepted power form: no
//! finite prefix can certify a statement about infinite tails.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// A step-size schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `λ_n = c (n + n0)^{−p}`.
    Power { c: f64, p: f64, n0: u64 },
    /// A finite prefix of explicit positive steps, then the tail rule.
    Explicit {
        prefix: Vec<f64>,
        tail: Option<PowerTail>,
    },
}

/// Tail rule of an explicit schedule, in power form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTail {
    pub c: f64,
    pub p: f64,
    pub n0: u64,
}

/// Validator verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleVerdict {
    Accept,
    Reject { reason: String },
}

impl ScheduleVerdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, ScheduleVerdict::Accept)
    }
}

impl StepSchedule {
    /// The default schedule: `λ_n = (n + 1)^{−0.75}`, inside the open part
    /// of the admissible exponent range (p = 1 decays slowly in practice).
    pub fn default_power() -> StepSchedule {
        StepSchedule::Power { c: 1.0, p: 0.75, n0: 1 }
    }

    pub fn power(c: f64, p: f64, n0: u64) -> Result<StepSchedule, ScheduleError> {
        if !(c > 0.0) {
            return Err(ScheduleError::Domain(format!("coefficient c = {c} must be > 0")));
        }
        if !(p > 0.0) {
            return Err(ScheduleError::Domain(format!("exponent p = {p} must be > 0")));
        }
        if n0 == 0 {
            return Err(ScheduleError::Domain("offset n0 must be >= 1".into()));
        }
        Ok(StepSchedule::Power { c, p, n0 })
    }

    pub fn explicit(
        prefix: Vec<f64>,
        tail: Option<PowerTail>,
    ) -> Result<StepSchedule, ScheduleError> {
        if prefix.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(ScheduleError::Domain("explicit steps must be positive".into()));
        }
        if let Some(t) = &tail {
            StepSchedule::power(t.c, t.p, t.n0)?;
        }
        Ok(StepSchedule::Explicit { prefix, tail })
    }

    /// The step `λ_n` (`n` is 0-based).
    pub fn lambda(&self, n: u64) -> f64 {
        match self {
            StepSchedule::Power { c, p, n0 } => c * ((n + n0) as f64).powf(-p),
            StepSchedule::Explicit { prefix, tail } => {
                if (n as usize) < prefix.len() {
                    prefix[n as usize]
                } else {
                    match tail {
                        Some(t) => t.c * ((n + t.n0) as f64).powf(-t.p),
                        // Rejected by the validator; extend constantly so the
                        // accessor stays total.
                        None => *prefix.last().unwrap_or(&1.0),
                    }
                }
            }
        }
    }

    /// Decide admissibility.
    ///
    /// Power schedules: accept iff `p ∈ (1/2, 1]` — the step sum diverges
    /// and the squared sum converges, both analytically. `p ≤ 1/2` makes the
    /// squared steps non-summable; `p > 1` makes the step sum converge.
    /// Explicit schedules are judged by their tail rule alone.
    pub fn validate(&self) -> ScheduleVerdict {
        match self {
            StepSchedule::Power { p, .. } => {
                if *p <= 0.5 {
                    ScheduleVerdict::Reject {
                        reason: format!(
                            "Robbins-Monro step condition fails: sum of squared steps \
                             diverges for exponent p = {p} <= 1/2"
                        ),
                    }
                } else if *p > 1.0 {
                    ScheduleVerdict::Reject {
                        reason: format!(
                            "Robbins-Monro step condition fails: step sum converges \
                             for exponent p = {p} > 1"
                        ),
                    }
                } else {
                    ScheduleVerdict::Accept
                }
            }
            StepSchedule::Explicit { tail, .. } => match tail {
                Some(t) => StepSchedule::Power { c: t.c, p: t.p, n0: t.n0 }.validate(),
                None => ScheduleVerdict::Reject {
                    reason: "undecidable from finite prefix: the step conditions \
                             constrain infinite tails, and no tail rule was given"
                        .into(),
                },
            },
        }
    }

    /// Partial sums `Σ_{n<N} λ_n` and `Σ_{n<N} λ_n²`.
    pub fn partial_sums(&self, n: u64) -> (f64, f64) {
        let mut s = 0.0;
        let mut sq = 0.0;
        for k in 0..n {
            let l = self.lambda(k);
            s += l;
            sq += l * l;
        }
        (s, sq)
    }
}
