//! Fréchet mean of 100 anchors in the Euclidean unit ball, estimated by the
//! stochastic proximal point iteration, with a closed-form reference.
//!
//! ```bash
//! cargo run --release --example frechet_mean
//! ```

use sppa::baseline::compute_baseline;
use sppa::diagnostics::{convergence_verdict, estimate_boundedness_modulus};
use sppa::engine::{run_ensemble, RunConfig};
use sppa::geometry::{Point, Space};
use sppa::integrand::Integrand;
use sppa::rng::stream_from_seed;
use sppa::schedule::StepSchedule;

fn main() {
    let space = Space::euclidean(5).unwrap();
    let mut stream = stream_from_seed(2024);
    let anchors: Vec<Point> = (0..100).map(|_| space.random_point(&mut stream, 1.0)).collect();
    // f(e, x) = 1/2 d^2(x, a_e), events uniform over the anchors
    let g = Integrand::squared_distance(space.clone(), anchors).unwrap();

    let baseline = compute_baseline(&g).unwrap();
    println!("closed-form mean (first coords): {:?}", baseline.argmin[0]);
    println!("min F = {}\n", baseline.min_f);

    let x0 = space.random_point(&mut stream, 1.0);
    let cfg = RunConfig::new(g, x0, StepSchedule::default_power())
        .with_iterations(100_000)
        .with_seed(7)
        .with_reference(baseline.argmin[0].clone());

    let replicas = 20;
    let t0 = std::time::Instant::now();
    let ens = run_ensemble(&cfg, replicas).unwrap();
    println!("{replicas} replicas x {} iterations in {:?}", cfg.iterations, t0.elapsed());

    let mut finals: Vec<f64> = ens
        .traces
        .iter()
        .map(|t| *t.dist_ref.as_ref().unwrap().last().unwrap())
        .collect();
    finals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "final distance to the mean: median {:.5}, range [{:.5}, {:.5}]",
        0.5 * (finals[replicas as usize / 2 - 1] + finals[replicas as usize / 2]),
        finals[0],
        finals[replicas as usize - 1]
    );

    let worst = ens
        .traces
        .iter()
        .map(|t| t.max_step_bound_violation())
        .fold(f64::NEG_INFINITY, f64::max);
    println!("worst step-bound violation: {worst:.3e} (nonpositive = bound holds)");

    let verdict = convergence_verdict(&space, &ens, &baseline.argmin, 0.02).unwrap();
    println!(
        "convergence fraction at eps=0.02: {}/{}",
        verdict.converged, verdict.replicas
    );

    println!("\nmodulus of uniform boundedness (per-replica sup of d(x_n, z)):");
    for row in estimate_boundedness_modulus(&ens, &[0.1, 0.25, 0.5]).unwrap() {
        match row.psi {
            Some(psi) => println!(
                "  psi({:<4}) = {:.4}   exceeding replicas: {}",
                row.level, psi, row.exceed_count
            ),
            None => println!("  psi({:<4}) unresolvable at R={replicas}", row.level),
        }
    }
}
