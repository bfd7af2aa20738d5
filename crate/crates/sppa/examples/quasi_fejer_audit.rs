//! Certify the quasi-Fejér inequality along a run: exact conditional
//! expectations where the event space is finite, Monte Carlo with a
//! 3-standard-error margin otherwise.
//!
//! ```bash
//! cargo run --release --example quasi_fejer_audit
//! ```

use sppa::baseline::compute_baseline;
use sppa::diagnostics::{check_quasi_fejer, quasi_fejer_scan, QfMode};
use sppa::engine::{run_sppa, RunConfig};
use sppa::geometry::{Point, Space};
use sppa::integrand::Integrand;
use sppa::rng::stream_from_seed;
use sppa::schedule::StepSchedule;

fn main() {
    let space = Space::euclidean(3).unwrap();
    let mut stream = stream_from_seed(42);
    let anchors: Vec<Point> = (0..20).map(|_| space.random_point(&mut stream, 1.0)).collect();
    let g = Integrand::squared_distance(space.clone(), anchors).unwrap();
    let z = compute_baseline(&g).unwrap().argmin[0].clone();

    let cfg = RunConfig::new(g, space.random_point(&mut stream, 1.0), StepSchedule::default_power())
        .with_iterations(20_000)
        .with_seed(1)
        .with_trace_stride(100)
        .with_reference(z.clone());
    let trace = run_sppa(&cfg).unwrap();
    let states: Vec<(u64, Point)> = trace.stored_iterates.iter().take(200).cloned().collect();

    println!("sampled {} states along the run\n", states.len());
    for mode in [QfMode::Exact, QfMode::MonteCarlo] {
        let scan = quasi_fejer_scan(&cfg, &states, &z, 10_000, mode, 99).unwrap();
        println!(
            "{:?} mode: pass rate {:.4} ({} of {}), worst slack {:.3e}",
            mode, scan.pass_rate, scan.pass_count, scan.states, scan.worst_slack
        );
    }

    // One row in detail: every quantity the inequality tracks.
    let (n, x) = states[states.len() / 2].clone();
    let mut s = stream_from_seed(7);
    let row = check_quasi_fejer(&cfg, &x, &z, n, 10_000, QfMode::Exact, &mut s).unwrap();
    println!("\nrow detail at n = {n}:");
    println!("  lambda_n = {:.6}", row.lambda);
    println!("  lhs  (conditional mean of d^2(x_next, z)) = {:.6e}", row.lhs);
    println!("  rhs  ((1+chi) d^2(x_n,z) - theta + eta)   = {:.6e}", row.rhs);
    println!("  chi = eta = 2 C lambda^2 Lbar             = {:.6e}", row.chi);
    println!("  theta = 2 lambda (F(x_n) - F(z))          = {:.6e}", row.theta);
    println!("  C(z,p) = 8 (1 + d^2(z,p))                 = {:.6}", row.c_zp);
    println!("  pass: {}", row.pass);
}
