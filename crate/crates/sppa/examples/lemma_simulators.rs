//! Standalone simulators for the probabilistic ingredients: the two-series
//! tail oscillation and the Lipschitz-sum decay, in admissible and
//! adversarial configurations.
//!
//! ```bash
//! cargo run --release --example lemma_simulators
//! ```

use sppa::diagnostics::simulators::{
    simulate_lipschitz_sum, two_series_check, AlphaSampler, BetaRule, GammaRule,
    LipschitzSumConfig,
};
use sppa::schedule::StepSchedule;

fn main() {
    let harmonic = StepSchedule::power(1.0, 1.0, 1).unwrap();
    let alpha = AlphaSampler::Uniform { lo: 0.0, hi: 2.0 };

    println!("=== Two-series tail oscillation ===\n");
    let report = two_series_check(&harmonic, &alpha, 40_000, 50, false, 7).unwrap();
    println!("admissible (lambda_n = 1/(n+1)):");
    for (h, o) in report.horizons.iter().zip(&report.median_tail_osc) {
        println!("  horizon {h:>6}: median oscillation {o:.5}");
    }
    println!("  shrinking: {}, flagged: {}\n", report.shrinking, report.flagged);

    let bad = StepSchedule::power(1.0, 0.5, 1).unwrap();
    let report = two_series_check(&bad, &alpha, 40_000, 50, true, 7).unwrap();
    println!("adversarial (lambda_n = (n+1)^(-1/2), squares not summable):");
    for (h, o) in report.horizons.iter().zip(&report.median_tail_osc) {
        println!("  horizon {h:>6}: median oscillation {o:.5}");
    }
    println!("  flagged: {} (as it must be)\n", report.flagged);

    println!("=== Lipschitz-sum decay ===\n");
    let admissible = LipschitzSumConfig {
        schedule: harmonic.clone(),
        theta: 2.0,
        alpha: alpha.clone(),
        gamma: GammaRule::Constant(1.5),
        beta: BetaRule::DrivenRecursion { beta0: 1.0, balance: 0.6 },
        admissible: true,
    };
    let report = simulate_lipschitz_sum(&admissible, 16_384, 50, 11).unwrap();
    println!("driven recursion (admissible):");
    println!("  horizons {:?}", report.horizons);
    println!("  replica 0 tail maxima {:?}", report.replicas[0].tail_max);
    println!(
        "  shrink fraction {:.2}, verdict {:?}\n",
        report.shrink_fraction, report.verdict
    );

    let adversarial = LipschitzSumConfig {
        schedule: harmonic,
        theta: 1.0,
        alpha,
        gamma: GammaRule::Constant(1.0),
        // constant beta with harmonic steps: sum(lambda_n beta_n) diverges
        beta: BetaRule::PowerDecay { scale: 1.0, q: 0.0 },
        admissible: false,
    };
    let report = simulate_lipschitz_sum(&adversarial, 16_384, 50, 11).unwrap();
    println!("constant beta (hypothesis broken by construction):");
    println!(
        "  replica 0 partial sums of lambda*beta {:?}",
        report.replicas[0].lambda_beta_sum
    );
    println!("  verdict {:?} — never reported as converging", report.verdict);
}
