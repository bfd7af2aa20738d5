//! Standalone simulators for the two probabilistic ingredients of the
//! convergence argument.
//!
//! The two-series simulator tracks the centered partial sums
//! `E_n = Σ_{k≤n} λ_k (α_k − µ)`; with square-summable steps their tail
//! oscillation shrinks (the series converges almost surely), and with a
//! non-square-summable schedule it does not.
//!
//! The Lipschitz-sum simulator generates nonnegative processes `(β_n)`
//! honoring the increment condition `β_{n+1} − β_n ≤ θ λ_n γ_n α_n` and
//! reports whether the tail max of `β` shrinks across horizon doublings.
//! That conclusion is only valid when `Σ λ_n β_n < ∞`; configurations that
//! break the hypothesis by construction are flagged, never reported as
//! converging.

use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::rng::{derive_seed, stream_from_seed, Stream};
use crate::schedule::StepSchedule;
use rand::Rng;

type Result<T> = std::result::Result<T, DiagnosticsError>;

/// I.i.d. nonnegative square-integrable driver with known mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSampler {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    /// A realized draw sequence with its known distribution mean, e.g. the
    /// growth values L(ξ_{n+1}) recorded along a run.
    Recorded { values: Vec<f64>, mean: f64 },
}

impl AlphaSampler {
    pub fn validate(&self) -> Result<()> {
        match self {
            AlphaSampler::Constant(c) if *c >= 0.0 && c.is_finite() => Ok(()),
            AlphaSampler::Uniform { lo, hi } if *lo >= 0.0 && hi > lo && hi.is_finite() => Ok(()),
            AlphaSampler::Recorded { values, mean }
                if *mean >= 0.0 && values.iter().all(|v| *v >= 0.0 && v.is_finite()) =>
            {
                Ok(())
            }
            _ => Err(DiagnosticsError::Domain(
                "alpha sampler must be nonnegative with finite parameters".into(),
            )),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            AlphaSampler::Constant(c) => *c,
            AlphaSampler::Uniform { lo, hi } => 0.5 * (lo + hi),
            AlphaSampler::Recorded { mean, .. } => *mean,
        }
    }

    fn check_len(&self, n: u64) -> Result<()> {
        match self {
            AlphaSampler::Recorded { values, .. } if (values.len() as u64) < n => {
                Err(DiagnosticsError::Config(format!(
                    "recorded alpha covers {} steps, need {n}",
                    values.len()
                )))
            }
            _ => Ok(()),
        }
    }

    fn draw_at(&self, k: usize, stream: &mut Stream) -> f64 {
        match self {
            AlphaSampler::Constant(c) => *c,
            AlphaSampler::Uniform { lo, hi } => stream.gen_range(*lo..*hi),
            AlphaSampler::Recorded { values, .. } => values[k],
        }
    }

    pub fn draw(&self, stream: &mut Stream) -> f64 {
        self.draw_at(0, stream)
    }
}

fn ladder(n: u64) -> Vec<u64> {
    vec![n / 4, n / 2, n]
}

fn window_oscillation(values: &[f64], h: u64) -> f64 {
    let window = &values[(h / 2) as usize..=h as usize];
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Outcome of the two-series oscillation check.
#[derive(Debug, Clone, Serialize)]
pub struct TwoSeriesReport {
    pub horizons: Vec<u64>,
    /// Median over replicas of the tail oscillation of `E_n` at each horizon.
    pub median_tail_osc: Vec<f64>,
    pub schedule_accepted: bool,
    /// Medians strictly decrease along the horizon ladder.
    pub shrinking: bool,
    /// Set when the schedule was rejected or the oscillation failed to
    /// shrink; a flagged report must not be read as convergence evidence.
    pub flagged: bool,
    pub replicas: u32,
}

/// Simulate the centered partial sums and report their tail oscillation at
/// doubling horizons.
///
/// A rejected schedule is an error unless `adversarial` is set, in which
/// case the simulation runs anyway and the report is flagged.
pub fn two_series_check(
    schedule: &StepSchedule,
    alpha: &AlphaSampler,
    n: u64,
    replicas: u32,
    adversarial: bool,
    seed: u64,
) -> Result<TwoSeriesReport> {
    alpha.validate()?;
    alpha.check_len(n)?;
    if n < 8 || replicas == 0 {
        return Err(DiagnosticsError::Domain("need n >= 8 and replicas >= 1".into()));
    }
    let accepted = schedule.validate().is_accept();
    if !accepted && !adversarial {
        return Err(DiagnosticsError::Config(
            "schedule rejected; pass adversarial=true to simulate it anyway".into(),
        ));
    }
    let mu = alpha.mean();
    let horizons = ladder(n);
    let mut osc: Vec<Vec<f64>> = vec![Vec::with_capacity(replicas as usize); horizons.len()];
    for r in 0..replicas {
        let mut stream = stream_from_seed(derive_seed(seed, r as u64));
        let mut partial = Vec::with_capacity(n as usize + 1);
        let mut e = 0.0;
        partial.push(e);
        for k in 0..n {
            e += schedule.lambda(k) * (alpha.draw_at(k as usize, &mut stream) - mu);
            partial.push(e);
        }
        for (i, &h) in horizons.iter().enumerate() {
            osc[i].push(window_oscillation(&partial, h));
        }
    }
    let median_tail_osc: Vec<f64> = osc.into_iter().map(median).collect();
    let shrinking = median_tail_osc.windows(2).all(|w| w[1] < w[0])
        || median_tail_osc.iter().all(|o| *o == 0.0);
    Ok(TwoSeriesReport {
        horizons,
        median_tail_osc,
        schedule_accepted: accepted,
        shrinking,
        flagged: !accepted || !shrinking,
        replicas,
    })
}

/// Almost-surely bounded nonnegative factor `γ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    Constant(f64),
    /// Values taken from a run, e.g. `(1 + d(x_{n+1},p))(1 + d(x_n,p))`.
    FromValues(Vec<f64>),
}

impl GammaRule {
    fn value(&self, k: usize) -> f64 {
        match self {
            GammaRule::Constant(c) => *c,
            GammaRule::FromValues(v) => v[k],
        }
    }

    fn check_len(&self, n: u64) -> Result<()> {
        match self {
            GammaRule::Constant(c) if *c >= 0.0 && c.is_finite() => Ok(()),
            GammaRule::Constant(_) => {
                Err(DiagnosticsError::Domain("gamma must be nonnegative".into()))
            }
            GammaRule::FromValues(v) if v.len() as u64 >= n => Ok(()),
            GammaRule::FromValues(v) => Err(DiagnosticsError::Config(format!(
                "gamma values cover {} steps, need {n}",
                v.len()
            ))),
        }
    }
}

/// Rule generating the `β` process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    /// `β_n = scale (n+1)^{−q}`; `q = 0` is a constant sequence.
    PowerDecay { scale: f64, q: f64 },
    /// `β_{n+1} = max(0, β_n + cap·u)` with `u ~ U[−1, balance]` and
    /// `cap = θ λ_n γ_n α_n`; honors the increment condition by
    /// construction and drifts downward for `balance < 1`.
    DrivenRecursion { beta0: f64, balance: f64 },
    /// Values taken from a run, e.g. `F̂(x_n) − min F`.
    FromValues(Vec<f64>),
}

/// Configuration of one Lipschitz-sum simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSumConfig {
    pub schedule: StepSchedule,
    pub theta: f64,
    pub alpha: AlphaSampler,
    pub gamma: GammaRule,
    pub beta: BetaRule,
    /// Whether `Σ λ_n β_n < ∞` is expected by construction. Inadmissible
    /// configurations are flagged rather than judged on tail decay.
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzVerdict {
    /// Admissible and the tail max shrank across doublings in at least
    /// [`SHRINK_FRACTION`] of replicas.
    Converging,
    /// Admissible but the tail failed to shrink.
    NotConverging,
    /// `Σ λ_n β_n` divergent by construction; β → 0 is not asserted.
    HypothesisViolated,
    /// The driver is identically zero, so β never moves.
    DegenerateConstant,
}

/// Fraction of replicas that must show strictly shrinking tail maxima for a
/// converging verdict.
pub const SHRINK_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReplicaReport {
    /// `max_{h/2 ≤ k ≤ h} β_k` per horizon.
    pub tail_max: Vec<f64>,
    /// `Σ_{k<h} λ_k β_k` per horizon.
    pub lambda_beta_sum: Vec<f64>,
    pub clip_events: u64,
    /// β never moved while every increment cap θλγα was zero: the increment
    /// condition carried no information.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzSumReport {
    pub horizons: Vec<u64>,
    pub replicas: Vec<LipschitzReplicaReport>,
    /// Fraction of replicas whose tail max strictly decreases along the
    /// ladder.
    pub shrink_fraction: f64,
    pub clip_total: u64,
    pub verdict: LipschitzVerdict,
}

/// Generate `(α, γ, β)` per replica honoring the increment condition and
/// report tail behavior at doubling horizons.
///
/// Proposed β increments beyond `θ λ γ α` are clipped to the bound and
/// recorded as clip events.
pub fn simulate_lipschitz_sum(
    cfg: &LipschitzSumConfig,
    n: u64,
    replicas: u32,
    seed: u64,
) -> Result<LipschitzSumReport> {
    cfg.alpha.validate()?;
    cfg.alpha.check_len(n)?;
    cfg.gamma.check_len(n)?;
    if !(cfg.theta > 0.0) {
        return Err(DiagnosticsError::Domain("theta must be > 0".into()));
    }
    if n < 8 || replicas == 0 {
        return Err(DiagnosticsError::Domain("need n >= 8 and replicas >= 1".into()));
    }
    if let ScheduleRejected(reason) = schedule_status(&cfg.schedule) {
        return Err(DiagnosticsError::Config(format!("schedule rejected: {reason}")));
    }
    if let BetaRule::FromValues(v) = &cfg.beta {
        if (v.len() as u64) < n + 1 {
            return Err(DiagnosticsError::Config(format!(
                "beta values cover {} states, need {}",
                v.len(),
                n + 1
            )));
        }
        if v.iter().any(|b| *b < 0.0) {
            return Err(DiagnosticsError::Domain("beta values must be nonnegative".into()));
        }
    }
    if let BetaRule::DrivenRecursion { beta0, balance } = &cfg.beta {
        if *beta0 < 0.0 || !(0.0..1.0).contains(balance) {
            return Err(DiagnosticsError::Domain(
                "recursion needs beta0 >= 0 and balance in [0, 1)".into(),
            ));
        }
    }

    let horizons = ladder(n);
    let mut reports = Vec::with_capacity(replicas as usize);
    let mut clip_total = 0u64;
    for r in 0..replicas {
        let mut stream = stream_from_seed(derive_seed(seed, r as u64));
        let mut beta = Vec::with_capacity(n as usize + 1);
        let mut clip_events = 0u64;
        let mut caps_all_zero = true;
        let beta0 = match &cfg.beta {
            BetaRule::PowerDecay { scale, .. } => *scale,
            BetaRule::DrivenRecursion { beta0, .. } => *beta0,
            BetaRule::FromValues(v) => v[0],
        };
        beta.push(beta0);
        for k in 0..n as usize {
            let alpha_k = cfg.alpha.draw_at(k, &mut stream);
            let gamma_k = cfg.gamma.value(k);
            let cap = cfg.theta * cfg.schedule.lambda(k as u64) * gamma_k * alpha_k;
            if cap != 0.0 {
                caps_all_zero = false;
            }
            let prev = beta[k];
            let proposed = match &cfg.beta {
                BetaRule::PowerDecay { scale, q } => scale * ((k + 2) as f64).powf(-q),
                BetaRule::DrivenRecursion { balance, .. } => {
                    let u: f64 = stream.gen_range(-1.0..=*balance);
                    prev + cap * u
                }
                BetaRule::FromValues(v) => v[k + 1],
            };
            let capped = prev + cap;
            let next = if proposed > capped + 1e-12 {
                clip_events += 1;
                capped
            } else {
                proposed
            };
            beta.push(next.max(0.0));
        }
        let tail_max: Vec<f64> = horizons
            .iter()
            .map(|&h| {
                beta[(h / 2) as usize..=h as usize]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut lambda_beta_sum = Vec::with_capacity(horizons.len());
        let mut acc = 0.0;
        let mut cursor = 0usize;
        for &h in &horizons {
            while (cursor as u64) < h {
                acc += cfg.schedule.lambda(cursor as u64) * beta[cursor];
                cursor += 1;
            }
            lambda_beta_sum.push(acc);
        }
        let degenerate = caps_all_zero && beta.iter().all(|b| *b == beta0);
        clip_total += clip_events;
        reports.push(LipschitzReplicaReport { tail_max, lambda_beta_sum, clip_events, degenerate });
    }

    let shrinkers = reports
        .iter()
        .filter(|r| r.tail_max.windows(2).all(|w| w[1] < w[0]))
        .count();
    let shrink_fraction = shrinkers as f64 / replicas as f64;
    let all_degenerate = reports.iter().all(|r| r.degenerate);
    let verdict = if all_degenerate {
        LipschitzVerdict::DegenerateConstant
    } else if !cfg.admissible {
        LipschitzVerdict::HypothesisViolated
    } else if shrink_fraction >= SHRINK_FRACTION {
        LipschitzVerdict::Converging
    } else {
        LipschitzVerdict::NotConverging
    };
    Ok(LipschitzSumReport { horizons, replicas: reports, shrink_fraction, clip_total, verdict })
}

enum ScheduleStatus {
    ScheduleAccepted,
    ScheduleRejected(String),
}
use ScheduleStatus::*;

fn schedule_status(s: &StepSchedule) -> ScheduleStatus {
    match s.validate() {
        crate::schedule::ScheduleVerdict::Accept => ScheduleAccepted,
        crate::schedule::ScheduleVerdict::Reject { reason } => ScheduleRejected(reason),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> StepSchedule {
        StepSchedule::power(1.0, 1.0, 1).unwrap()
    }

    #[test]
    fn two_series_constant_alpha_zero_oscillation() {
        let report = two_series_check(
            &harmonic(),
            &AlphaSampler::Constant(1.0),
            1024,
            10,
            false,
            3,
        )
        .unwrap();
        assert!(report.median_tail_osc.iter().all(|o| *o == 0.0));
        assert!(!report.flagged);
    }

    #[test]
    fn two_series_uniform_alpha_shrinks() {
        let report = two_series_check(
            &harmonic(),
            &AlphaSampler::Uniform { lo: 0.0, hi: 2.0 },
            8192,
            50,
            false,
            7,
        )
        .unwrap();
        assert!(report.schedule_accepted);
        assert!(report.shrinking, "medians: {:?}", report.median_tail_osc);
        assert!(!report.flagged);
    }

    #[test]
    fn two_series_adversarial_schedule_flagged() {
        let bad = StepSchedule::power(1.0, 0.5, 1).unwrap();
        let err = two_series_check(
            &bad,
            &AlphaSampler::Uniform { lo: 0.0, hi: 2.0 },
            1024,
            10,
            false,
            7,
        );
        assert!(matches!(err, Err(DiagnosticsError::Config(_))));
        let report = two_series_check(
            &bad,
            &AlphaSampler::Uniform { lo: 0.0, hi: 2.0 },
            8192,
            50,
            true,
            7,
        )
        .unwrap();
        assert!(!report.schedule_accepted);
        assert!(report.flagged);
    }

    #[test]
    fn lipschitz_degenerate_constant_flagged() {
        // Zero-mean nonnegative driver: alpha == 0, so beta stays at 1.
        let cfg = LipschitzSumConfig {
            schedule: harmonic(),
            theta: 1.0,
            alpha: AlphaSampler::Constant(0.0),
            gamma: GammaRule::Constant(1.0),
            beta: BetaRule::DrivenRecursion { beta0: 1.0, balance: 0.5 },
            admissible: false,
        };
        let report = simulate_lipschitz_sum(&cfg, 256, 10, 5).unwrap();
        assert_eq!(report.verdict, LipschitzVerdict::DegenerateConstant);
        for r in &report.replicas {
            assert!(r.tail_max.iter().all(|t| *t == 1.0));
        }
    }

    #[test]
    fn lipschitz_power_decay_converges() {
        // beta_n = (n+1)^{-1/4} decreases, so the increment condition holds
        // with zero clips and sum(lambda beta) converges.
        let cfg = LipschitzSumConfig {
            schedule: harmonic(),
            theta: 1.0,
            alpha: AlphaSampler::Uniform { lo: 0.0, hi: 2.0 },
            gamma: GammaRule::Constant(1.0),
            beta: BetaRule::PowerDecay { scale: 1.0, q: 0.25 },
            admissible: true,
        };
        let report = simulate_lipschitz_sum(&cfg, 4096, 20, 5).unwrap();
        assert_eq!(report.verdict, LipschitzVerdict::Converging);
        assert_eq!(report.clip_total, 0);
        assert_eq!(report.shrink_fraction, 1.0);
    }

    #[test]
    fn lipschitz_driven_recursion_converges() {
        let cfg = LipschitzSumConfig {
            schedule: harmonic(),
            theta: 2.0,
            alpha: AlphaSampler::Uniform { lo: 0.0, hi: 2.0 },
            gamma: GammaRule::Constant(1.5),
            beta: BetaRule::DrivenRecursion { beta0: 1.0, balance: 0.6 },
            admissible: true,
        };
        let report = simulate_lipschitz_sum(&cfg, 16384, 50, 11).unwrap();
        assert_eq!(report.verdict, LipschitzVerdict::Converging, "{:?}", report.shrink_fraction);
    }

    #[test]
    fn lipschitz_adversarial_never_converging() {
        // Constant beta with a harmonic schedule: sum(lambda beta) diverges.
        let cfg = LipschitzSumConfig {
            schedule: harmonic(),
            theta: 1.0,
            alpha: AlphaSampler::Uniform { lo: 0.0, hi: 2.0 },
            gamma: GammaRule::Constant(1.0),
            beta: BetaRule::PowerDecay { scale: 1.0, q: 0.0 },
            admissible: false,
        };
        let report = simulate_lipschitz_sum(&cfg, 4096, 20, 5).unwrap();
        assert_eq!(report.verdict, LipschitzVerdict::HypothesisViolated);
        // evidence: the partial sums keep growing linearly in log n
        for r in &report.replicas {
            assert!(r.lambda_beta_sum[2] > r.lambda_beta_sum[1]);
        }
    }

    #[test]
    fn lipschitz_clip_events_recorded() {
        // A wildly increasing explicit sequence must be clipped to honor the
        // increment condition.
        let values: Vec<f64> = (0..257).map(|k| if k % 2 == 0 { 0.0 } else { 10.0 }).collect();
        let cfg = LipschitzSumConfig {
            schedule: harmonic(),
            theta: 1.0,
            alpha: AlphaSampler::Constant(1.0),
            gamma: GammaRule::Constant(1.0),
            beta: BetaRule::FromValues(values),
            admissible: true,
        };
        let report = simulate_lipschitz_sum(&cfg, 256, 3, 5).unwrap();
        assert!(report.clip_total > 0);
    }

    #[test]
    fn lipschitz_rejects_short_gamma() {
        let cfg = LipschitzSumConfig {
            schedule: harmonic(),
            theta: 1.0,
            alpha: AlphaSampler::Constant(1.0),
            gamma: GammaRule::FromValues(vec![1.0; 10]),
            beta: BetaRule::PowerDecay { scale: 1.0, q: 1.0 },
            admissible: true,
        };
        assert!(matches!(
            simulate_lipschitz_sum(&cfg, 256, 3, 5),
            Err(DiagnosticsError::Config(_))
        ));
    }
}
