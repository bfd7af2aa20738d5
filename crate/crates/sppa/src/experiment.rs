//! Experiment orchestration: build the run from a config, execute baseline,
//! ensemble, and diagnostics, and persist trace/manifest/report artifacts.
//!
//! Exit-code contract (scriptable gating):
//! 0 = all requested checks passed, 1 = a check failed, 2 = configuration
//! error, 3 = internal error.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use crate::baseline::{compute_baseline, BaselineResult};
use crate::config::{
    CheckKind, ExperimentConfig, IntegrandFamilyChoice, ReferenceSpec, RunMode, SimulateConfig,
};
use crate::diagnostics::simulators::{
    simulate_lipschitz_sum, two_series_check, AlphaSampler, BetaRule, GammaRule,
    LipschitzSumConfig, LipschitzSumReport, LipschitzVerdict, TwoSeriesReport,
};
use crate::diagnostics::{
    convergence_verdict, ensemble_summability, estimate_asymptotic_center,
    estimate_boundedness_modulus, quasi_fejer_scan, summability_report, CheckResult,
    DiagnosticsReport, QfMode,
};
use crate::engine::{run_ensemble, RunConfig};
use crate::geometry::{text, Point, GEOM_TOL};
use crate::integrand::{checks as prox_checks, Integrand};
use crate::rng::stream_from_seed;
use crate::schedule::ScheduleVerdict;
use crate::trace::{write_trace_csv_file, Manifest, ReplicaEnsemble, ARTIFACT_VERSION};

/// Environment variable selecting the worker thread count (default:
/// available parallelism).
pub const THREADS_ENV: &str = "SPPA_THREADS";

static THREAD_POOL: OnceLock<()> = OnceLock::new();

/// Build the global thread pool from [`THREADS_ENV`] once; later calls are
/// no-ops.
pub fn init_threads() {
    THREAD_POOL.get_or_init(|| {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            if let Ok(n) = v.parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailed = 1,
    ConfigError = 2,
    InternalError = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Everything a finished experiment hands back.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub status: ExitStatus,
    pub report: Option<DiagnosticsReport>,
    pub baseline: Option<BaselineResult>,
    pub messages: Vec<String>,
    pub trace_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

impl ExperimentOutcome {
    fn config_error(msg: String) -> ExperimentOutcome {
        ExperimentOutcome {
            status: ExitStatus::ConfigError,
            report: None,
            baseline: None,
            messages: vec![msg],
            trace_path: None,
            manifest_path: None,
            report_path: None,
        }
    }

    fn internal_error(msg: String) -> ExperimentOutcome {
        ExperimentOutcome {
            status: ExitStatus::InternalError,
            messages: vec![msg],
            ..ExperimentOutcome::config_error(String::new())
        }
    }
}

/// Build the integrand described by a config.
pub fn build_integrand(cfg: &ExperimentConfig) -> Result<Integrand, String> {
    let contents = std::fs::read_to_string(&cfg.anchors_path)
        .map_err(|e| format!("anchors file {}: {e}", cfg.anchors_path.display()))?;
    let anchors = text::parse_anchor_file(&cfg.space, &contents).map_err(|e| e.to_string())?;
    if anchors.is_empty() {
        return Err("anchors file contains no points".into());
    }
    let points: Vec<Point> = anchors.iter().map(|(p, _)| p.clone()).collect();
    let weights: Vec<f64> = anchors.iter().map(|(_, w)| *w).collect();
    let uniform = weights.iter().all(|w| (*w - 1.0).abs() <= 1e-15);

    let build_plain = |family: IntegrandFamilyChoice| -> Result<Integrand, String> {
        let g = match family {
            IntegrandFamilyChoice::SquaredDistance => {
                Integrand::squared_distance(cfg.space.clone(), points.clone())
            }
            IntegrandFamilyChoice::Distance => {
                Integrand::distance(cfg.space.clone(), points.clone())
            }
            IntegrandFamilyChoice::FiniteSum => unreachable!("handled by caller"),
        }
        .map_err(|e| e.to_string())?;
        // The trailing anchor column carries sampling weights.
        if uniform {
            Ok(g)
        } else {
            g.with_probs(weights.clone()).map_err(|e| e.to_string())
        }
    };

    let mut g = match cfg.family {
        IntegrandFamilyChoice::FiniteSum => {
            let comps = anchors
                .iter()
                .map(|(p, w)| {
                    let comp = match cfg.component_family {
                        IntegrandFamilyChoice::SquaredDistance => {
                            Integrand::squared_distance(cfg.space.clone(), vec![p.clone()])
                        }
                        IntegrandFamilyChoice::Distance => {
                            Integrand::distance(cfg.space.clone(), vec![p.clone()])
                        }
                        IntegrandFamilyChoice::FiniteSum => unreachable!("rejected in config"),
                    }
                    .map_err(|e| e.to_string())?;
                    comp.with_weights(vec![*w]).map_err(|e| e.to_string())
                })
                .collect::<Result<Vec<_>, String>>()?;
            Integrand::finite_sum(comps).map_err(|e| e.to_string())?
        }
        family => build_plain(family)?,
    };
    if let Some(bp) = &cfg.base_point {
        let p = text::parse_point(&cfg.space, bp).map_err(|e| e.to_string())?;
        g = g.with_base_point(p).map_err(|e| e.to_string())?;
    }
    if let Some(r) = cfg.operating_radius {
        g = g.with_operating_radius(r).map_err(|e| e.to_string())?;
    }
    Ok(g)
}

/// Assemble the engine-level run config (resolving the reference point) and
/// the baseline, when one is requested or needed.
pub fn build_run(
    cfg: &ExperimentConfig,
) -> Result<(RunConfig, Option<BaselineResult>), String> {
    if let ScheduleVerdict::Reject { reason } = cfg.schedule.validate() {
        return Err(format!("schedule rejected: {reason}"));
    }
    let integrand = build_integrand(cfg)?;
    let x0 = text::parse_point(&cfg.space, &cfg.x0).map_err(|e| format!("run.x0: {e}"))?;

    let needs_baseline = cfg.compute_baseline || cfg.reference == ReferenceSpec::Baseline;
    let baseline = if needs_baseline {
        Some(compute_baseline(&integrand).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let reference = match &cfg.reference {
        ReferenceSpec::None => None,
        ReferenceSpec::Baseline => {
            Some(baseline.as_ref().expect("computed above").argmin[0].clone())
        }
        ReferenceSpec::Point(enc) => {
            Some(text::parse_point(&cfg.space, enc).map_err(|e| format!("run.reference: {e}"))?)
        }
    };

    let mut run = RunConfig::new(integrand, x0, cfg.schedule.clone())
        .with_iterations(cfg.iterations)
        .with_seed(cfg.seed)
        .with_trace_stride(cfg.trace_stride)
        .with_big_f_samples(cfg.big_f_samples);
    if let Some(z) = reference {
        run = run.with_reference(z);
    }
    Ok((run, baseline))
}

/// Manifest of a run configuration.
pub fn manifest_for(run: &RunConfig, replicas: u32, splitting: bool) -> Result<Manifest, String> {
    Ok(Manifest {
        version: ARTIFACT_VERSION.to_string(),
        seed: run.seed,
        iterations: run.iterations,
        trace_stride: run.trace_stride,
        big_f_samples: run.big_f_samples,
        replicas,
        splitting,
        integrand: run.integrand.to_spec().map_err(|e| e.to_string())?,
        schedule: run.schedule.clone(),
        x0: run.x0.clone(),
        reference: run.reference.clone(),
    })
}

/// Rebuild the engine-level run config from a manifest; the reconstructed
/// run reproduces the original trace bit-exactly.
pub fn run_from_manifest(m: &Manifest) -> Result<(RunConfig, u32), String> {
    let integrand = Integrand::from_spec(&m.integrand).map_err(|e| e.to_string())?;
    let mut run = RunConfig::new(integrand, m.x0.clone(), m.schedule.clone())
        .with_iterations(m.iterations)
        .with_seed(m.seed)
        .with_trace_stride(m.trace_stride)
        .with_big_f_samples(m.big_f_samples);
    if let Some(z) = &m.reference {
        run = run.with_reference(z.clone());
    }
    Ok((run, m.replicas))
}

/// Derive a Lipschitz-sum simulator configuration from a finished run: β is
/// the realized `F̂(x_n) − min F`, γ the realized `(1 + d(x_{n+1}, p))(1 +
/// d(x_n, p))`, α the drawn growth values with the integrand's mean growth,
/// and θ twice the mean growth.
pub fn lipschitz_config_from_trace(
    run: &RunConfig,
    trace: &crate::trace::RunTrace,
    min_f: f64,
) -> LipschitzSumConfig {
    let beta: Vec<f64> = trace.f_hat.iter().map(|f| (f - min_f).max(0.0)).collect();
    let gamma: Vec<f64> = trace
        .dist_base
        .windows(2)
        .map(|w| (1.0 + w[1]) * (1.0 + w[0]))
        .collect();
    LipschitzSumConfig {
        schedule: run.schedule.clone(),
        theta: 2.0 * run.integrand.mean_growth(),
        alpha: AlphaSampler::Recorded {
            values: trace.growth_drawn.clone(),
            mean: run.integrand.mean_growth(),
        },
        gamma: GammaRule::FromValues(gamma),
        beta: BetaRule::FromValues(beta),
        admissible: true,
    }
}

/// States `(n, x_n)` for the quasi-Fejér scan: stored iterates pooled
/// across replicas, capped at `count`, spread evenly.
pub fn sample_states(ens: &ReplicaEnsemble, count: usize) -> Vec<(u64, Point)> {
    let mut all: Vec<(u64, Point)> = Vec::new();
    for t in &ens.traces {
        all.extend(t.stored_iterates.iter().cloned());
    }
    if all.len() <= count {
        return all;
    }
    let stride = all.len() as f64 / count as f64;
    (0..count).map(|i| all[(i as f64 * stride) as usize].clone()).collect()
}

fn json_f64(v: f64) -> serde_json::Value {
    serde_json::json!(v)
}

/// One plot-ready CSV companion of a check: one row per sampled state or
/// replica.
#[derive(Debug, Clone)]
pub struct DetailTable {
    /// Check name; written as `check_<name>.csv`.
    pub name: String,
    pub csv: String,
}

fn detail_table(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> DetailTable {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("header");
    for row in rows {
        w.write_record(&row).expect("row");
    }
    let csv = String::from_utf8(w.into_inner().expect("flush")).expect("utf8");
    DetailTable { name: name.to_string(), csv }
}

fn fmt(v: f64) -> String {
    crate::trace::format_f64(v)
}

/// Run the diagnostics checks requested by a config over a finished
/// ensemble, returning the report plus per-check CSV detail tables.
pub fn run_diagnostics(
    cfg: &ExperimentConfig,
    run: &RunConfig,
    ens: &ReplicaEnsemble,
    baseline: Option<&BaselineResult>,
) -> Result<(DiagnosticsReport, Vec<DetailTable>), String> {
    let mut report = DiagnosticsReport::default();
    let mut tables: Vec<DetailTable> = Vec::new();
    let space = run.integrand.space().clone();
    let reference = run.reference.clone();
    for check in &cfg.checks {
        let result = match check {
            CheckKind::StepBound => {
                let worst = ens
                    .traces
                    .iter()
                    .map(|t| t.max_step_bound_violation())
                    .fold(f64::NEG_INFINITY, f64::max);
                let rows: u64 = ens.traces.iter().map(|t| t.steps() as u64).sum();
                tables.push(detail_table(
                    check.name(),
                    &["replica", "transitions", "max_violation"],
                    ens.traces
                        .iter()
                        .map(|t| {
                            vec![
                                t.replica.to_string(),
                                t.steps().to_string(),
                                fmt(t.max_step_bound_violation()),
                            ]
                        })
                        .collect(),
                ));
                CheckResult::new(
                    check.name(),
                    worst <= GEOM_TOL,
                    GEOM_TOL,
                    rows,
                    format!("max step-bound violation {worst:.3e} over {rows} transitions"),
                )
            }
            CheckKind::ProxInequality => {
                let mut stream = stream_from_seed(cfg.diag_seed);
                let samples = cfg.mc_samples.min(10_000);
                let r = prox_checks::sample_prox_checks(
                    &run.integrand,
                    &mut stream,
                    samples,
                    run.integrand.operating_radius(),
                )
                .map_err(|e| e.to_string())?;
                let worst =
                    r.max_prox_inequality_residual.max(r.max_nonexpansion_gap);
                CheckResult::new(
                    check.name(),
                    worst <= GEOM_TOL,
                    GEOM_TOL,
                    samples as u64,
                    format!(
                        "max prox-inequality residual {:.3e}, max nonexpansion gap {:.3e}",
                        r.max_prox_inequality_residual, r.max_nonexpansion_gap
                    ),
                )
            }
            CheckKind::Growth => {
                let mut stream = stream_from_seed(cfg.diag_seed ^ 0x67);
                let samples = cfg.mc_samples.min(10_000);
                let worst = run
                    .integrand
                    .growth_check(&mut stream, samples, run.integrand.operating_radius())
                    .map_err(|e| e.to_string())?;
                CheckResult::new(
                    check.name(),
                    worst <= GEOM_TOL,
                    GEOM_TOL,
                    samples as u64,
                    format!("max growth-bound violation {worst:.3e}"),
                )
            }
            CheckKind::QuasiFejer => {
                let z = reference
                    .as_ref()
                    .ok_or("quasi-fejer needs a reference point")?;
                let states = sample_states(ens, cfg.qf_states as usize);
                let mode = if run.integrand.events().exact_expectation() {
                    QfMode::Exact
                } else {
                    QfMode::MonteCarlo
                };
                let scan =
                    quasi_fejer_scan(run, &states, z, cfg.mc_samples, mode, cfg.diag_seed)
                        .map_err(|e| e.to_string())?;
                tables.push(detail_table(
                    check.name(),
                    &["n", "lambda", "lhs", "lhs_se", "rhs", "chi", "theta", "se_total", "pass"],
                    scan.rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.n.to_string(),
                                fmt(r.lambda),
                                fmt(r.lhs),
                                fmt(r.lhs_se),
                                fmt(r.rhs),
                                fmt(r.chi),
                                fmt(r.theta),
                                fmt(r.se_total),
                                r.pass.to_string(),
                            ]
                        })
                        .collect(),
                ));
                CheckResult::new(
                    check.name(),
                    scan.pass_rate >= 0.99,
                    0.99,
                    scan.states,
                    format!(
                        "pass rate {:.4} over {} states ({:?} mode, worst slack {:.3e})",
                        scan.pass_rate, scan.states, scan.mode, scan.worst_slack
                    ),
                )
                .with_details(serde_json::to_value(&scan).map_err(|e| e.to_string())?)
            }
            CheckKind::Summability => {
                let min_f = baseline.ok_or("summability needs the baseline")?.min_f;
                let agg = ensemble_summability(ens, min_f, 3).map_err(|e| e.to_string())?;
                let mut rows = Vec::new();
                for (t, rep) in ens.traces.iter().zip(&agg.per_replica) {
                    for (i, h) in rep.horizons.iter().enumerate() {
                        rows.push(vec![
                            t.replica.to_string(),
                            h.to_string(),
                            fmt(rep.partial_sums[i]),
                            fmt(rep.partial_sum_ses[i]),
                            fmt(rep.tail_oscillations[i]),
                            fmt(rep.sup_dist),
                        ]);
                    }
                }
                tables.push(detail_table(
                    check.name(),
                    &["replica", "horizon", "partial_sum", "partial_sum_se", "tail_oscillation", "sup_dist"],
                    rows,
                ));
                CheckResult::new(
                    check.name(),
                    agg.stable,
                    agg.se_allowance,
                    ens.len() as u64,
                    format!(
                        "median partial-sum increments {:?} at horizons {:?} \
                         (non-increasing = Cauchy witness)",
                        agg.median_increments, agg.horizons
                    ),
                )
            }
            CheckKind::Boundedness => {
                let sups = crate::diagnostics::replica_sup_distances(ens)
                    .map_err(|e| e.to_string())?;
                tables.push(detail_table(
                    check.name(),
                    &["replica", "sup_dist"],
                    ens.traces
                        .iter()
                        .zip(&sups)
                        .map(|(t, s)| vec![t.replica.to_string(), fmt(*s)])
                        .collect(),
                ));
                let rows = estimate_boundedness_modulus(ens, &cfg.levels)
                    .map_err(|e| e.to_string())?;
                let r = ens.len() as f64;
                let ok = rows.iter().all(|row| {
                    !row.resolvable
                        || row.exceed_count as f64 <= (row.level * r).ceil()
                });
                let summary = rows
                    .iter()
                    .map(|row| match row.psi {
                        Some(psi) => format!(
                            "psi({})={:.4} exceed={}",
                            row.level, psi, row.exceed_count
                        ),
                        None => format!("psi({}) unresolvable at R={}", row.level, ens.len()),
                    })
                    .collect::<Vec<_>>()
                    .join("; ");
                CheckResult::new(check.name(), ok, 0.0, ens.len() as u64, summary)
                    .with_details(serde_json::to_value(&rows).map_err(|e| e.to_string())?)
            }
            CheckKind::Oscillation => {
                let mut shrinking = 0usize;
                let mut rows = Vec::new();
                for t in &ens.traces {
                    let rep = summability_report(t, 0.0, 3).map_err(|e| e.to_string())?;
                    let o = &rep.tail_oscillations;
                    for (h, osc) in rep.horizons.iter().zip(o) {
                        rows.push(vec![t.replica.to_string(), h.to_string(), fmt(*osc)]);
                    }
                    if o.len() >= 2 && o[o.len() - 1] < o[o.len() - 2] {
                        shrinking += 1;
                    }
                }
                tables.push(detail_table(
                    check.name(),
                    &["replica", "horizon", "tail_oscillation"],
                    rows,
                ));
                let frac = shrinking as f64 / ens.len() as f64;
                CheckResult::new(
                    check.name(),
                    frac >= 0.9,
                    0.9,
                    ens.len() as u64,
                    format!(
                        "reference-distance tail oscillation shrank across doubling in \
                         {shrinking}/{} replicas",
                        ens.len()
                    ),
                )
            }
            CheckKind::Convergence => {
                let b = baseline.ok_or("convergence needs the baseline")?;
                let rep = convergence_verdict(&space, ens, &b.argmin, cfg.eps)
                    .map_err(|e| e.to_string())?;
                tables.push(detail_table(
                    check.name(),
                    &["replica", "final_distance", "converged"],
                    ens.traces
                        .iter()
                        .zip(&rep.final_distances)
                        .map(|(t, d)| {
                            vec![t.replica.to_string(), fmt(*d), (*d <= cfg.eps).to_string()]
                        })
                        .collect(),
                ));
                CheckResult::new(
                    check.name(),
                    rep.fraction >= 0.9,
                    cfg.eps,
                    ens.len() as u64,
                    format!(
                        "{}/{} replicas within eps={} of the minimizer set ({})",
                        rep.converged, rep.replicas, cfg.eps, rep.note
                    ),
                )
                .with_details(json_f64(rep.fraction))
            }
            CheckKind::AsymptoticCenter => {
                let b = baseline.ok_or("asymptotic-center needs the baseline")?;
                // center of the tail window of stored iterates, per replica 0
                let t = &ens.traces[0];
                let tail: Vec<Point> = t
                    .stored_iterates
                    .iter()
                    .skip(t.stored_iterates.len() / 2)
                    .map(|(_, p)| p.clone())
                    .collect();
                let (center, radius) =
                    estimate_asymptotic_center(&space, &tail).map_err(|e| e.to_string())?;
                let d = b.distance_to_argmin(&space, &center);
                CheckResult::new(
                    check.name(),
                    d <= cfg.eps,
                    cfg.eps,
                    tail.len() as u64,
                    format!(
                        "tail-window asymptotic center within {d:.4} of the minimizer \
                         (radius {radius:.4})"
                    ),
                )
            }
        };
        report.push(result);
    }
    Ok((report, tables))
}

/// Execute a full experiment: baseline, ensemble, diagnostics, artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentOutcome {
    init_threads();
    let (run, baseline) = match build_run(cfg) {
        Ok(v) => v,
        Err(msg) => return ExperimentOutcome::config_error(msg),
    };
    let splitting = cfg.mode == RunMode::Splitting;
    let ens = {
        let result = if splitting {
            crate::engine::run_splitting_ensemble(&run, cfg.replicas)
        } else {
            run_ensemble(&run, cfg.replicas)
        };
        match result {
            Ok(e) => e,
            Err(crate::engine::EngineError::Config(msg)) => {
                return ExperimentOutcome::config_error(msg)
            }
            Err(e) => return ExperimentOutcome::internal_error(e.to_string()),
        }
    };

    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
        return ExperimentOutcome::internal_error(format!(
            "cannot create {}: {e}",
            cfg.output_dir.display()
        ));
    }
    let trace_path = cfg.output_dir.join("trace.csv");
    let manifest_path = cfg.output_dir.join("manifest.json");
    let report_path = cfg.output_dir.join("report.json");

    if let Err(e) = write_trace_csv_file(&trace_path, &ens.traces) {
        return ExperimentOutcome::internal_error(format!("trace write: {e}"));
    }
    let manifest = match manifest_for(&run, cfg.replicas, splitting) {
        Ok(m) => m,
        Err(msg) => return ExperimentOutcome::internal_error(msg),
    };
    if let Err(e) = manifest.write_file(&manifest_path) {
        return ExperimentOutcome::internal_error(format!("manifest write: {e}"));
    }

    let (report, tables) = match run_diagnostics(cfg, &run, &ens, baseline.as_ref()) {
        Ok(r) => r,
        Err(msg) => return ExperimentOutcome::internal_error(msg),
    };
    if let Err(e) = std::fs::write(&report_path, report.to_json()) {
        return ExperimentOutcome::internal_error(format!("report write: {e}"));
    }
    for table in &tables {
        let path = cfg.output_dir.join(format!("check_{}.csv", table.name));
        if let Err(e) = std::fs::write(&path, &table.csv) {
            return ExperimentOutcome::internal_error(format!("detail table write: {e}"));
        }
    }

    let status = if report.all_pass() { ExitStatus::Pass } else { ExitStatus::CheckFailed };
    let mut messages = Vec::new();
    for c in &report.checks {
        messages.push(format!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.summary));
    }
    ExperimentOutcome {
        status,
        report: Some(report),
        baseline,
        messages,
        trace_path: Some(trace_path),
        manifest_path: Some(manifest_path),
        report_path: Some(report_path),
    }
}

/// Outcome of a `simulate` invocation: the report plus whether the observed
/// verdict matches the configured expectation.
pub enum SimulationOutcome {
    LipschitzSum { report: LipschitzSumReport, as_expected: bool },
    TwoSeries { report: TwoSeriesReport, as_expected: bool },
}

/// Which lemma simulator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    LipschitzSum,
    TwoSeries,
}

/// Run a lemma simulator from its config. For derived Lipschitz configs the
/// run artifacts in `derive_from` are reconstructed from their manifest.
pub fn run_simulation(lemma: Lemma, cfg: &SimulateConfig) -> Result<SimulationOutcome, String> {
    init_threads();
    match lemma {
        Lemma::TwoSeries => {
            let report = two_series_check(
                &cfg.schedule,
                &cfg.alpha,
                cfg.n,
                cfg.replicas,
                cfg.adversarial,
                cfg.seed,
            )
            .map_err(|e| e.to_string())?;
            // Adversarial runs must be flagged; admissible runs must shrink.
            let as_expected =
                if cfg.adversarial { report.flagged } else { !report.flagged };
            Ok(SimulationOutcome::TwoSeries { report, as_expected })
        }
        Lemma::LipschitzSum => {
            let sim_cfg = match &cfg.derive_from {
                None => LipschitzSumConfig {
                    schedule: cfg.schedule.clone(),
                    theta: cfg.theta,
                    alpha: cfg.alpha.clone(),
                    gamma: cfg.gamma.clone(),
                    beta: cfg.beta.clone(),
                    admissible: cfg.admissible,
                },
                Some(dir) => {
                    let manifest = Manifest::read_file(&dir.join("manifest.json"))
                        .map_err(|e| e.to_string())?;
                    let (run, _) = run_from_manifest(&manifest)?;
                    let trace =
                        crate::engine::run_sppa(&run).map_err(|e| e.to_string())?;
                    let min_f = compute_baseline(&run.integrand)
                        .map_err(|e| e.to_string())?
                        .min_f;
                    lipschitz_config_from_trace(&run, &trace, min_f)
                }
            };
            let n = if cfg.derive_from.is_some() {
                // the derived sequences bound the horizon
                cfg.n.min(match &sim_cfg.beta {
                    BetaRule::FromValues(v) => (v.len() as u64).saturating_sub(1),
                    _ => cfg.n,
                })
            } else {
                cfg.n
            };
            let report = simulate_lipschitz_sum(&sim_cfg, n, cfg.replicas, cfg.seed)
                .map_err(|e| e.to_string())?;
            let as_expected = if sim_cfg.admissible {
                report.verdict == LipschitzVerdict::Converging
                    || report.verdict == LipschitzVerdict::DegenerateConstant
            } else {
                report.verdict == LipschitzVerdict::HypothesisViolated
            };
            Ok(SimulationOutcome::LipschitzSum { report, as_expected })
        }
    }
}

/// Load the manifest that sits next to a trace file.
pub fn manifest_beside(trace_path: &Path) -> Result<Manifest, String> {
    let dir = trace_path.parent().unwrap_or_else(|| Path::new("."));
    Manifest::read_file(&dir.join("manifest.json")).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_sppa;

    fn write_minimal(dir: &Path, extra: &str) -> ExperimentConfig {
        std::fs::write(dir.join("anchors.txt"), "0,0\n2,0\n").unwrap();
        let text = format!(
            "run.space = euclidean:2\n\
             run.integrand.family = squared-distance\n\
             run.integrand.anchors = anchors.txt\n\
             run.x0 = 2,0\n\
             run.schedule = power:c=1,p=0.75,n0=1\n\
             run.iterations = 200\n\
             run.seed = 7\n\
             output.dir = out\n{extra}"
        );
        ExperimentConfig::from_str_at(&text, dir).unwrap()
    }

    #[test]
    fn minimal_experiment_passes_and_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_minimal(dir.path(), "");
        let outcome = run_experiment(&cfg);
        assert_eq!(outcome.status, ExitStatus::Pass);
        assert!(outcome.trace_path.unwrap().exists());
        assert!(outcome.manifest_path.unwrap().exists());
        assert!(outcome.report_path.unwrap().exists());
    }

    #[test]
    fn full_diagnostics_pipeline_passes() {
        // Single-anchor problem: the contraction is deterministic, so every
        // check holds exactly at small N. The statistical versions run at
        // scale in the acceptance suite.
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("anchors.txt"), "0,0\n").unwrap();
        let text = "run.space = euclidean:2\n\
             run.integrand.family = squared-distance\n\
             run.integrand.anchors = anchors.txt\n\
             run.x0 = 2,0\n\
             run.schedule = power:c=1,p=0.75,n0=1\n\
             run.iterations = 200\n\
             run.seed = 7\n\
             output.dir = out\n\
             run.replicas = 5\nrun.reference = baseline\nbaseline.compute = true\n\
             diagnostics.checks = step-bound,prox-inequality,growth,quasi-fejer,summability,boundedness,oscillation,convergence,asymptotic-center\n\
             diagnostics.mc_samples = 400\ndiagnostics.states = 20\ndiagnostics.eps = 0.2\ndiagnostics.levels = 0.5\n";
        let cfg = ExperimentConfig::from_str_at(text, dir.path()).unwrap();
        let outcome = run_experiment(&cfg);
        for m in &outcome.messages {
            eprintln!("{m}");
        }
        assert_eq!(outcome.status, ExitStatus::Pass);
        let report = outcome.report.unwrap();
        assert_eq!(report.checks.len(), 9);
    }

    #[test]
    fn monte_carlo_pipeline_for_anchor_samplers() {
        // Anchor-sampler event spaces route F and the quasi-Fejér check
        // through Monte Carlo; the auto-selected mode and the 3-SE margins
        // must still certify the run.
        let space = crate::geometry::Space::euclidean(2).unwrap();
        let anchors = vec![
            Point::euclidean([0.0, 0.0]),
            Point::euclidean([2.0, 0.0]),
            Point::euclidean([0.0, 2.0]),
        ];
        let g = Integrand::squared_distance(space.clone(), anchors)
            .unwrap()
            .into_anchor_sampler()
            .unwrap();
        let z = compute_baseline(&g).unwrap().argmin[0].clone();
        let run = RunConfig::new(g, Point::euclidean([1.5, 0.5]), crate::schedule::StepSchedule::default_power())
            .with_iterations(500)
            .with_seed(4)
            .with_big_f_samples(400)
            .with_reference(z);
        let ens = run_ensemble(&run, 3).unwrap();
        assert!(ens.traces[0].f_se.iter().any(|se| *se > 0.0), "MC F estimates carry SE");

        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("anchors.txt"), "0,0\n").unwrap();
        let mut cfg = write_minimal(dir.path(), "");
        cfg.checks = vec![CheckKind::QuasiFejer, CheckKind::StepBound];
        cfg.mc_samples = 400;
        cfg.qf_states = 10;
        let baseline = compute_baseline(&run.integrand).unwrap();
        let (report, _tables) = run_diagnostics(&cfg, &run, &ens, Some(&baseline)).unwrap();
        assert!(report.all_pass(), "{:?}", report.checks);
        let qf = report.checks.iter().find(|c| c.name == "quasi-fejer").unwrap();
        assert!(qf.summary.contains("MonteCarlo"), "{}", qf.summary);
    }

    #[test]
    fn rejected_schedule_maps_to_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = write_minimal(dir.path(), "");
        cfg.schedule = crate::schedule::StepSchedule::power(1.0, 0.5, 1).unwrap();
        let outcome = run_experiment(&cfg);
        assert_eq!(outcome.status, ExitStatus::ConfigError);
        assert!(
            outcome.messages[0].contains("squared steps"),
            "reason must name the step condition: {}",
            outcome.messages[0]
        );
    }

    #[test]
    fn manifest_reconstruction_reproduces_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_minimal(dir.path(), "run.reference = baseline\nbaseline.compute = true\n");
        let (run, _) = build_run(&cfg).unwrap();
        let original = run_sppa(&run).unwrap();
        let manifest = manifest_for(&run, 1, false).unwrap();
        let json = manifest.to_json().unwrap();
        let back = Manifest::from_json(&json).unwrap();
        let (rebuilt, replicas) = run_from_manifest(&back).unwrap();
        assert_eq!(replicas, 1);
        let rerun = run_sppa(&rebuilt).unwrap();
        assert_eq!(original, rerun);
    }

    #[test]
    fn derived_lipschitz_config_has_no_clips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_minimal(dir.path(), "run.reference = baseline\nbaseline.compute = true\n");
        let (run, baseline) = build_run(&cfg).unwrap();
        let trace = run_sppa(&run).unwrap();
        let sim = lipschitz_config_from_trace(&run, &trace, baseline.unwrap().min_f);
        let report = simulate_lipschitz_sum(&sim, 200, 1, 3).unwrap();
        assert_eq!(report.clip_total, 0, "realized trace must satisfy the increment bound");
    }
}
