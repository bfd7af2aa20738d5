//! Thin command-line front end; all logic lives in the library.
//!
//! Exit codes: 0 all requested checks passed, 1 a check failed, 2
//! configuration error, 3 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sppa::config::{CheckKind, ExperimentConfig, SimulateConfig};
use sppa::diagnostics::DiagnosticsReport;
use sppa::experiment::{
    self, manifest_beside, run_from_manifest, run_simulation, ExitStatus, Lemma,
    SimulationOutcome,
};
use sppa::schedule::{ScheduleVerdict, StepSchedule};

#[derive(Parser)]
#[command(
    name = "sppa",
    about = "Stochastic proximal point runs and convergence diagnostics over Hadamard spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LemmaArg {
    LipschitzSum,
    TwoSeries,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file (baseline, ensemble,
    /// diagnostics; writes trace.csv, manifest.json, report.json).
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a power-schedule parameterization against the step conditions.
    ValidateSchedule {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        n0: u64,
    },
    /// Re-run diagnostics against a recorded trace (the manifest.json next
    /// to the trace reconstructs the run bit-exactly).
    Diagnose {
        #[arg(long)]
        trace: PathBuf,
        /// Comma-separated checks (step-bound, prox-inequality, growth,
        /// quasi-fejer, summability, boundedness, oscillation, convergence,
        /// asymptotic-center).
        #[arg(long)]
        checks: String,
        #[arg(long, default_value_t = 10_000)]
        mc_samples: u32,
        #[arg(long, default_value_t = 200)]
        states: u32,
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        #[arg(long, default_value = "0.1,0.5")]
        levels: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate one of the probabilistic lemmas from a config file.
    Simulate {
        #[arg(long, value_enum)]
        lemma: LemmaArg,
        #[arg(long)]
        config: PathBuf,
        /// Write the report JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the reference minimizer for the configured problem.
    Baseline {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    experiment::init_threads();
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::ValidateSchedule { c, p, n0 } => cmd_validate_schedule(c, p, n0),
        Command::Diagnose { trace, checks, mc_samples, states, eps, levels, seed } => {
            cmd_diagnose(&trace, &checks, mc_samples, states, eps, &levels, seed)
        }
        Command::Simulate { lemma, config, out } => cmd_simulate(lemma, &config, out.as_deref()),
        Command::Baseline { config } => cmd_baseline(&config),
    };
    ExitCode::from(status.code() as u8)
}

fn cmd_run(config: &Path) -> ExitStatus {
    let cfg = match ExperimentConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let outcome = experiment::run_experiment(&cfg);
    for m in &outcome.messages {
        println!("{m}");
    }
    if let Some(b) = &outcome.baseline {
        println!(
            "baseline: method={:?} min_f={} accuracy={}",
            b.method, b.min_f, b.accuracy
        );
    }
    if let Some(p) = &outcome.trace_path {
        println!("trace:    {}", p.display());
    }
    if let Some(p) = &outcome.manifest_path {
        println!("manifest: {}", p.display());
    }
    if let Some(p) = &outcome.report_path {
        println!("report:   {}", p.display());
    }
    outcome.status
}

fn cmd_validate_schedule(c: f64, p: f64, n0: u64) -> ExitStatus {
    match StepSchedule::power(c, p, n0) {
        Err(e) => {
            eprintln!("invalid schedule parameters: {e}");
            ExitStatus::ConfigError
        }
        Ok(s) => match s.validate() {
            ScheduleVerdict::Accept => {
                println!("accept: steps diverge in sum, squares are summable");
                ExitStatus::Pass
            }
            ScheduleVerdict::Reject { reason } => {
                println!("reject: {reason}");
                ExitStatus::CheckFailed
            }
        },
    }
}

fn cmd_diagnose(
    trace: &Path,
    checks: &str,
    mc_samples: u32,
    states: u32,
    eps: f64,
    levels: &str,
    seed: u64,
) -> ExitStatus {
    let checks: Vec<CheckKind> = match checks
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(CheckKind::parse)
        .collect::<Result<_, _>>()
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let levels: Vec<f64> = match levels
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
    {
        Ok(l) => l,
        Err(e) => {
            eprintln!("config error: bad --levels: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let manifest = match manifest_beside(trace) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let (mut run, replicas) = match run_from_manifest(&manifest) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let needs_baseline = checks.iter().any(CheckKind::needs_reference);
    let baseline = if needs_baseline {
        match sppa::baseline::compute_baseline(&run.integrand) {
            Ok(b) => Some(b),
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitStatus::ConfigError;
            }
        }
    } else {
        None
    };
    if run.reference.is_none() {
        if let Some(b) = &baseline {
            run = run.with_reference(b.argmin[0].clone());
        }
    }
    // Reconstruct the ensemble bit-exactly from the manifest.
    let ens = match sppa::engine::run_ensemble(&run, replicas) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("internal error: {e}");
            return ExitStatus::InternalError;
        }
    };
    // The recorded file must agree with its manifest re-run, column for
    // column; a mismatch means trace and manifest drifted apart.
    match sppa::trace::read_trace_csv_file(trace) {
        Ok(recorded) => {
            if let Err(msg) = verify_recorded_trace(&recorded, &ens) {
                eprintln!("config error: {msg}");
                return ExitStatus::ConfigError;
            }
        }
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", trace.display());
            return ExitStatus::ConfigError;
        }
    }
    // Reuse the experiment pipeline with a synthetic config carrying the
    // requested knobs.
    let cfg = diagnose_config(&manifest, checks, mc_samples, states, eps, levels, seed);
    match experiment::run_diagnostics(&cfg, &run, &ens, baseline.as_ref()) {
        Ok((report, _tables)) => {
            print_report(&report);
            if report.all_pass() {
                ExitStatus::Pass
            } else {
                ExitStatus::CheckFailed
            }
        }
        Err(e) => {
            eprintln!("internal error: {e}");
            ExitStatus::InternalError
        }
    }
}

/// Compare recorded scalar rows against the manifest re-run. The re-run may
/// carry reference distances the original lacked, so `dist_ref` is only
/// compared when both sides have it.
fn verify_recorded_trace(
    recorded: &[sppa::trace::ScalarTrace],
    rerun: &sppa::trace::ReplicaEnsemble,
) -> Result<(), String> {
    if recorded.len() != rerun.traces.len() {
        return Err(format!(
            "trace holds {} replicas, manifest re-run produced {}",
            recorded.len(),
            rerun.traces.len()
        ));
    }
    for (rec, run) in recorded.iter().zip(&rerun.traces) {
        let same = rec.lambda == run.lambda
            && rec.event == run.event
            && rec.step_len == run.step_len
            && rec.step_bound == run.step_bound
            && rec.f_hat == run.f_hat
            && rec.f_se == run.f_se
            && match (&rec.dist_ref, &run.dist_ref) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            };
        if !same {
            return Err(format!(
                "replica {}: recorded trace disagrees with its manifest re-run",
                rec.replica
            ));
        }
    }
    Ok(())
}

fn diagnose_config(
    manifest: &sppa::trace::Manifest,
    checks: Vec<CheckKind>,
    mc_samples: u32,
    states: u32,
    eps: f64,
    levels: Vec<f64>,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        space: manifest.integrand.space.clone(),
        mode: if manifest.splitting {
            sppa::config::RunMode::Splitting
        } else {
            sppa::config::RunMode::Sppa
        },
        family: sppa::config::IntegrandFamilyChoice::Distance,
        component_family: sppa::config::IntegrandFamilyChoice::Distance,
        anchors_path: PathBuf::new(),
        base_point: None,
        operating_radius: None,
        x0: String::new(),
        schedule: manifest.schedule.clone(),
        iterations: manifest.iterations,
        seed: manifest.seed,
        trace_stride: manifest.trace_stride,
        big_f_samples: manifest.big_f_samples,
        replicas: manifest.replicas,
        reference: sppa::config::ReferenceSpec::Baseline,
        compute_baseline: true,
        checks,
        mc_samples,
        qf_states: states,
        levels,
        eps,
        diag_seed: seed,
        output_dir: PathBuf::new(),
    }
}

fn print_report(report: &DiagnosticsReport) {
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.summary);
    }
}

fn cmd_simulate(lemma: LemmaArg, config: &Path, out: Option<&Path>) -> ExitStatus {
    let cfg = match SimulateConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let lemma = match lemma {
        LemmaArg::LipschitzSum => Lemma::LipschitzSum,
        LemmaArg::TwoSeries => Lemma::TwoSeries,
    };
    match run_simulation(lemma, &cfg) {
        Ok(outcome) => {
            let (json, as_expected, summary) = match &outcome {
                SimulationOutcome::LipschitzSum { report, as_expected } => (
                    serde_json::to_string_pretty(report).unwrap(),
                    *as_expected,
                    format!(
                        "verdict {:?}, shrink fraction {:.3}, {} clip events",
                        report.verdict, report.shrink_fraction, report.clip_total
                    ),
                ),
                SimulationOutcome::TwoSeries { report, as_expected } => (
                    serde_json::to_string_pretty(report).unwrap(),
                    *as_expected,
                    format!(
                        "median tail oscillation {:?} at horizons {:?}{}",
                        report.median_tail_osc,
                        report.horizons,
                        if report.flagged { " [flagged]" } else { "" }
                    ),
                ),
            };
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &json) {
                        eprintln!("internal error writing {}: {e}", path.display());
                        return ExitStatus::InternalError;
                    }
                }
                None => println!("{json}"),
            }
            eprintln!("{summary}");
            if as_expected {
                ExitStatus::Pass
            } else {
                ExitStatus::CheckFailed
            }
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitStatus::ConfigError
        }
    }
}

fn cmd_baseline(config: &Path) -> ExitStatus {
    let cfg = match ExperimentConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    let integrand = match experiment::build_integrand(&cfg) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitStatus::ConfigError;
        }
    };
    match sppa::baseline::compute_baseline(&integrand) {
        Ok(b) => {
            println!("{}", serde_json::to_string_pretty(&b).unwrap());
            ExitStatus::Pass
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitStatus::ConfigError
        }
    }
}
