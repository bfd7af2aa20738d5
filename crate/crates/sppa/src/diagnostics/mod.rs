//! Empirical certification of the quantities the convergence analysis
//! tracks.
//!
//! The central object is the quasi-Fejér inequality: conditioned on the
//! first `n` events,
//!
//! `E_n[d²(x_{n+1}, z)] ≤ (1 + χ_n) d²(x_n, z) − θ_n + η_n`
//!
//! with `χ_n = η_n = 2 C_{z,p} λ_n² L̄`, `θ_n = 2 λ_n (F(x_n) − F(z))`,
//! `L̄ = ∫ L² dµ`, and the explicit constant `C_{z,p} = 8 (1 + d²(z, p))`
//! assembled from the growth chain
//! `f(ξ,x_n) − f(ξ,x_{n+1}) ≤ 4 λ_n L²(ξ)(1 + d²(x_n,p))` and
//! `1 + d²(x,p) ≤ 2 (1 + d²(z,p)) (1 + d²(x,z))`. The analysis only asserts
//! such a constant exists; this value is ours and every report names it.
//!
//! Conditional expectations are evaluated exactly for finite event spaces
//! and by Monte Carlo otherwise; all stochastic pass/fail decisions use a
//! 3-standard-error margin. Almost-sure statements are operationalized as
//! replica-fraction statements, and limsup-type quantities use the max over
//! the second half of the realized window.

pub mod simulators;

use serde::Serialize;
use thiserror::Error;

use crate::engine::RunConfig;
use crate::geometry::{GeometryError, Point, Space, GEOM_TOL};
use crate::integrand::{Event, EventSpace, IntegrandError};
use crate::rng::{derive_seed, stream_from_seed, Stream};
use crate::search::pattern_search;
use crate::trace::{ReplicaEnsemble, RunTrace};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

type Result<T> = std::result::Result<T, DiagnosticsError>;

/// The explicit quasi-Fejér constant `C_{z,p} = 8 (1 + d²(z, p))`.
pub fn quasi_fejer_constant(space: &Space, z: &Point, p: &Point) -> f64 {
    let d = space.distance_unchecked(z, p);
    8.0 * (1.0 + d * d)
}

/// How the conditional expectation on the left-hand side is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QfMode {
    /// Exact weighted sum over a finite event space (standard error 0).
    Exact,
    /// Monte Carlo over fresh events.
    MonteCarlo,
}

/// One evaluated quasi-Fejér inequality instance.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiFejerRow {
    pub n: u64,
    pub lambda: f64,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub chi: f64,
    pub eta: f64,
    pub theta: f64,
    pub c_zp: f64,
    /// Combined standard error of the lhs estimate and the F terms in θ.
    pub se_total: f64,
    pub pass: bool,
    pub mode: QfMode,
}

/// Evaluate the quasi-Fejér inequality at state `x_n` with step `λ_n` from
/// the config's schedule, against reference `z`.
///
/// `Exact` mode requires a finite event space; `MonteCarlo` uses
/// `mc_samples ≥ 100` fresh events. Pass means
/// `lhs ≤ rhs + 3·se_total` (plus the geometric tolerance).
pub fn check_quasi_fejer(
    cfg: &RunConfig,
    x_n: &Point,
    z: &Point,
    n: u64,
    mc_samples: u32,
    mode: QfMode,
    stream: &mut Stream,
) -> Result<QuasiFejerRow> {
    let g = &cfg.integrand;
    let space = g.space();
    space.validate(x_n)?;
    space.validate(z)?;
    if mc_samples == 0 {
        return Err(DiagnosticsError::Domain("mc_samples must be >= 1".into()));
    }
    let lambda = cfg.schedule.lambda(n);

    let (lhs, lhs_se) = match mode {
        QfMode::Exact => {
            let probs = match g.events() {
                EventSpace::Finite { probs } => probs.clone(),
                _ => {
                    return Err(DiagnosticsError::Config(
                        "exact mode needs a finite event space".into(),
                    ))
                }
            };
            let mut total = 0.0;
            for (k, p) in probs.iter().enumerate() {
                if *p > 0.0 {
                    let next = g.prox(lambda, &Event::Index(k), x_n)?;
                    let d = space.distance_unchecked(&next, z);
                    total += p * d * d;
                }
            }
            (total, 0.0)
        }
        QfMode::MonteCarlo => {
            if mc_samples < 100 {
                return Err(DiagnosticsError::Domain(
                    "Monte Carlo mode needs mc_samples >= 100".into(),
                ));
            }
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..mc_samples {
                let e = g.sample_event(stream);
                let next = g.prox(lambda, &e, x_n)?;
                let d = space.distance_unchecked(&next, z);
                let v = d * d;
                sum += v;
                sum_sq += v * v;
            }
            let m = mc_samples as f64;
            let mean = sum / m;
            let var = ((sum_sq / m - mean * mean) * m / (m - 1.0)).max(0.0);
            (mean, (var / m).sqrt())
        }
    };

    let (f_x, f_x_se) = g.big_f(x_n, mc_samples, stream)?;
    let (f_z, f_z_se) = g.big_f(z, mc_samples, stream)?;
    let c_zp = quasi_fejer_constant(space, z, g.base_point());
    let l_bar = g.mean_growth_sq();
    let chi = 2.0 * c_zp * lambda * lambda * l_bar;
    let eta = chi;
    let theta = 2.0 * lambda * (f_x - f_z);
    let dz = space.distance_unchecked(x_n, z);
    let rhs = (1.0 + chi) * dz * dz - theta + eta;
    let se_total =
        (lhs_se.powi(2) + (2.0 * lambda).powi(2) * (f_x_se.powi(2) + f_z_se.powi(2))).sqrt();
    let pass = lhs <= rhs + 3.0 * se_total + GEOM_TOL;
    Ok(QuasiFejerRow {
        n,
        lambda,
        lhs,
        lhs_se,
        rhs,
        chi,
        eta,
        theta,
        c_zp,
        se_total,
        pass,
        mode,
    })
}

/// Aggregate of quasi-Fejér checks over many sampled states.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiFejerScan {
    pub mode: QfMode,
    pub mc_samples: u32,
    pub states: u64,
    pub pass_count: u64,
    pub pass_rate: f64,
    /// Most negative slack `rhs + 3·se − lhs` seen (negative means a fail).
    pub worst_slack: f64,
    /// Per-state rows; exported as a CSV detail table rather than report JSON.
    #[serde(skip)]
    pub rows: Vec<QuasiFejerRow>,
}

/// Run the quasi-Fejér check over `(n, x_n)` states sampled along runs
/// (e.g. the stored iterates of an ensemble).
pub fn quasi_fejer_scan(
    cfg: &RunConfig,
    states: &[(u64, Point)],
    z: &Point,
    mc_samples: u32,
    mode: QfMode,
    seed: u64,
) -> Result<QuasiFejerScan> {
    if states.is_empty() {
        return Err(DiagnosticsError::Domain("no states to check".into()));
    }
    let mut pass_count = 0u64;
    let mut worst_slack = f64::INFINITY;
    let mut rows = Vec::with_capacity(states.len());
    for (i, (n, x)) in states.iter().enumerate() {
        let mut stream = stream_from_seed(derive_seed(seed, i as u64));
        let row = check_quasi_fejer(cfg, x, z, *n, mc_samples, mode, &mut stream)?;
        if row.pass {
            pass_count += 1;
        }
        worst_slack = worst_slack.min(row.rhs + 3.0 * row.se_total + GEOM_TOL - row.lhs);
        rows.push(row);
    }
    Ok(QuasiFejerScan {
        mode,
        mc_samples,
        states: states.len() as u64,
        pass_count,
        pass_rate: pass_count as f64 / states.len() as f64,
        worst_slack,
        rows,
    })
}

/// Per-replica `sup_n d(x_n, z)` of an ensemble (requires reference
/// distances).
pub fn replica_sup_distances(ens: &ReplicaEnsemble) -> Result<Vec<f64>> {
    ens.traces
        .iter()
        .map(|t| {
            t.dist_ref
                .as_ref()
                .map(|d| d.iter().copied().fold(0.0, f64::max))
                .ok_or_else(|| {
                    DiagnosticsError::Config(
                        "ensemble traces carry no reference distances".into(),
                    )
                })
        })
        .collect()
}

/// Doubling-ladder view of the summability and boundedness quantities of
/// one trace: partial sums `S_h = Σ_{n<h} λ_n (F̂(x_n) − min F)`, the
/// running sup of `d(x_n, z)`, and the tail oscillation of `d(x_n, z)` over
/// the window `[h/2, h]`.
#[derive(Debug, Clone, Serialize)]
pub struct SummabilityReport {
    pub horizons: Vec<u64>,
    pub partial_sums: Vec<f64>,
    /// Standard error of each partial sum, accumulated from the F̂ errors.
    pub partial_sum_ses: Vec<f64>,
    pub sup_dist: f64,
    pub tail_oscillations: Vec<f64>,
    /// Most negative summand `λ_n (F̂(x_n) − min F)`; below `−3·SE` would
    /// contradict min F being the minimum.
    pub min_summand: f64,
}

/// Horizon ladder `h, h/2, h/4, …` (at least 2) used by doubling checks.
fn doubling_horizons(n: u64, rungs: u32) -> Vec<u64> {
    let mut out = Vec::new();
    let mut h = n;
    for _ in 0..rungs {
        if h < 2 {
            break;
        }
        out.push(h);
        h /= 2;
    }
    out.reverse();
    out
}

pub fn summability_report(
    trace: &RunTrace,
    min_f: f64,
    rungs: u32,
) -> Result<SummabilityReport> {
    let dist = trace
        .dist_ref
        .as_ref()
        .ok_or_else(|| DiagnosticsError::Config("trace carries no reference distances".into()))?;
    let n = trace.steps() as u64;
    if n < 4 {
        return Err(DiagnosticsError::Domain("trace too short for a doubling ladder".into()));
    }
    let horizons = doubling_horizons(n, rungs.max(2));
    let mut partial_sums = Vec::with_capacity(horizons.len());
    let mut partial_sum_ses = Vec::with_capacity(horizons.len());
    let mut sum = 0.0;
    let mut var = 0.0;
    let mut min_summand = f64::INFINITY;
    let mut cursor = 0usize;
    for &h in &horizons {
        while (cursor as u64) < h {
            let lambda = trace.lambda[cursor];
            let summand = lambda * (trace.f_hat[cursor] - min_f);
            sum += summand;
            var += (lambda * trace.f_se[cursor]).powi(2);
            min_summand = min_summand.min(summand);
            cursor += 1;
        }
        partial_sums.push(sum);
        partial_sum_ses.push(var.sqrt());
    }
    let sup_dist = dist.iter().copied().fold(0.0, f64::max);
    let tail_oscillations = horizons
        .iter()
        .map(|&h| {
            let window = &dist[(h / 2) as usize..=h as usize];
            let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = window.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        })
        .collect();
    Ok(SummabilityReport {
        horizons,
        partial_sums,
        partial_sum_ses,
        sup_dist,
        tail_oscillations,
        min_summand,
    })
}

/// Ensemble view of the summability ladder: per-doubling increments of
/// `S_h = Σ_{n<h} λ_n (F̂(x_n) − min F)` aggregated across replicas.
///
/// A convergent series has shrinking doubling increments, but one replica's
/// increment is a heavy sum of correlated terms whose comparison flips by
/// raw noise in a healthy run; the median across replicas is the stable
/// witness.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummability {
    pub horizons: Vec<u64>,
    /// Median over replicas of `S_h − S_{h/2}` per rung (the first rung is
    /// the median of `S` at the smallest horizon).
    pub median_increments: Vec<f64>,
    /// Largest 3·SE of any partial sum entering the medians.
    pub se_allowance: f64,
    pub per_replica: Vec<SummabilityReport>,
    /// Median increments non-increasing along the ladder within the SE
    /// allowance.
    pub stable: bool,
}

pub fn ensemble_summability(
    ens: &ReplicaEnsemble,
    min_f: f64,
    rungs: u32,
) -> Result<EnsembleSummability> {
    if ens.is_empty() {
        return Err(DiagnosticsError::Domain("empty ensemble".into()));
    }
    let per_replica: Vec<SummabilityReport> = ens
        .traces
        .iter()
        .map(|t| summability_report(t, min_f, rungs))
        .collect::<Result<Vec<_>>>()?;
    let horizons = per_replica[0].horizons.clone();
    let rungs = horizons.len();
    let mut median_increments = Vec::with_capacity(rungs);
    let mut se_allowance: f64 = 0.0;
    for i in 0..rungs {
        let mut incrs: Vec<f64> = per_replica
            .iter()
            .map(|r| {
                se_allowance = se_allowance.max(3.0 * r.partial_sum_ses[i]);
                if i == 0 {
                    r.partial_sums[0]
                } else {
                    r.partial_sums[i] - r.partial_sums[i - 1]
                }
            })
            .collect();
        incrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = incrs.len() / 2;
        median_increments.push(if incrs.len() % 2 == 1 {
            incrs[m]
        } else {
            0.5 * (incrs[m - 1] + incrs[m])
        });
    }
    let stable = median_increments
        .windows(2)
        .all(|w| w[1] <= w[0] + se_allowance + GEOM_TOL);
    Ok(EnsembleSummability { horizons, median_increments, se_allowance, per_replica, stable })
}

/// One row of the boundedness-modulus table.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusRow {
    pub level: f64,
    /// Empirical `(1 − level)`-quantile of the per-replica sup distances.
    pub psi: Option<f64>,
    pub exceed_count: usize,
    pub resolvable: bool,
}

/// Estimate the modulus of uniform boundedness from an ensemble: for each
/// level λ, `ψ(λ)` is the empirical `(1−λ)`-quantile of the per-replica
/// `sup_n d(x_n, z)`, reported with the count of exceeding replicas.
/// Levels below `1/R` are reported unresolvable.
pub fn estimate_boundedness_modulus(
    ens: &ReplicaEnsemble,
    levels: &[f64],
) -> Result<Vec<ModulusRow>> {
    let r = ens.len();
    if r < 2 {
        return Err(DiagnosticsError::Domain("modulus estimation needs >= 2 replicas".into()));
    }
    let sups = replica_sup_distances(ens)?;
    let mut sorted = sups.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        if !(0.0 < level && level < 1.0) {
            return Err(DiagnosticsError::Domain(format!("level {level} outside (0, 1)")));
        }
        if level < 1.0 / r as f64 {
            out.push(ModulusRow { level, psi: None, exceed_count: 0, resolvable: false });
            continue;
        }
        let k = ((1.0 - level) * r as f64).ceil() as usize;
        let psi = sorted[k.clamp(1, r) - 1];
        let exceed_count = sups.iter().filter(|s| **s > psi).count();
        out.push(ModulusRow { level, psi: Some(psi), exceed_count, resolvable: true });
    }
    Ok(out)
}

/// Finite-window surrogate of the asymptotic center: an approximate
/// minimizer of `x ↦ max_i d²(x_i, x)` with the attained value.
///
/// A farthest-point averaging warmup walks into the window's hull, then a
/// geodesic pattern search (probing toward the window members and the
/// midpoints of the currently-farthest pairs, which supply descent
/// directions the members alone miss) refines to the step floor.
pub fn estimate_asymptotic_center(
    space: &Space,
    window: &[Point],
) -> Result<(Point, f64)> {
    if window.is_empty() {
        return Err(DiagnosticsError::Domain("empty window".into()));
    }
    for p in window {
        space.validate(p)?;
    }
    let objective = |x: &Point| {
        window
            .iter()
            .map(|w| {
                let d = space.distance_unchecked(w, x);
                d * d
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };

    // Farthest-point averaging warmup.
    let mut center = window[0].clone();
    for k in 0..2000u64 {
        let farthest = window
            .iter()
            .max_by(|a, b| {
                let da = space.distance_unchecked(a, &center);
                let db = space.distance_unchecked(b, &center);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        center = space.geodesic_unchecked(&center, farthest, 1.0 / (k + 2) as f64);
    }

    let probes = |x: &Point| {
        let mut order: Vec<usize> = (0..window.len()).collect();
        order.sort_by(|a, b| {
            let da = space.distance_unchecked(&window[*a], x);
            let db = space.distance_unchecked(&window[*b], x);
            db.partial_cmp(&da).unwrap()
        });
        let mut targets: Vec<Point> = window.to_vec();
        let top = &order[..order.len().min(3)];
        for (i, &a) in top.iter().enumerate() {
            for &b in &top[i + 1..] {
                targets.push(space.geodesic_unchecked(&window[a], &window[b], 0.5));
            }
        }
        targets
    };
    let init_step = objective(&center).sqrt().max(1e-6);
    let (center, radius) =
        pattern_search(space, center, objective, probes, init_step, 1e-12);
    Ok((center, radius))
}

/// Convergence verdict of an ensemble against a known minimizer set.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub eps: f64,
    pub replicas: usize,
    pub converged: usize,
    pub fraction: f64,
    pub final_distances: Vec<f64>,
    /// The check is a strong-convergence surrogate; it witnesses weak
    /// convergence because the implemented model spaces are locally compact.
    pub note: String,
}

pub fn convergence_verdict(
    space: &Space,
    ens: &ReplicaEnsemble,
    argmin: &[Point],
    eps: f64,
) -> Result<ConvergenceReport> {
    if argmin.is_empty() {
        return Err(DiagnosticsError::Domain("empty minimizer set".into()));
    }
    if !(eps > 0.0) {
        return Err(DiagnosticsError::Domain("eps must be > 0".into()));
    }
    let final_distances: Vec<f64> = ens
        .traces
        .iter()
        .map(|t| {
            argmin
                .iter()
                .map(|z| space.distance_unchecked(z, &t.final_iterate))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let converged = final_distances.iter().filter(|d| **d <= eps).count();
    Ok(ConvergenceReport {
        eps,
        replicas: ens.len(),
        converged,
        fraction: converged as f64 / ens.len() as f64,
        final_distances,
        note: "strong-convergence surrogate; valid as a weak-convergence witness because \
               the implemented model spaces are locally compact"
            .into(),
    })
}

/// One named check outcome; every check states its tolerance and sample
/// counts so reports are self-describing.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub tolerance: f64,
    pub samples: u64,
    pub summary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl CheckResult {
    pub fn new(
        name: impl Into<String>,
        pass: bool,
        tolerance: f64,
        samples: u64,
        summary: impl Into<String>,
    ) -> CheckResult {
        CheckResult {
            name: name.into(),
            pass,
            tolerance,
            samples,
            summary: summary.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: serde_json::Value) -> CheckResult {
        self.details = Some(details);
        self
    }
}

/// Machine-readable outcome bundle of a diagnostics pass.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<CheckResult>,
}

impl DiagnosticsReport {
    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
