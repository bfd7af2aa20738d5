//! Random-order splitting on an R-tree: the geodesic median of three
//! symmetric spider legs is the origin, and the splitting iteration finds it.
//!
//! ```bash
//! cargo run --release --example spider_median
//! ```

use sppa::baseline::compute_baseline;
use sppa::diagnostics::convergence_verdict;
use sppa::engine::{run_splitting_ensemble, RunConfig};
use sppa::geometry::{Point, Space};
use sppa::integrand::Integrand;
use sppa::schedule::StepSchedule;

fn main() {
    let space = Space::spider(3).unwrap();
    // F = mean of f_k = d(., (leg k, 1)); component draws are uniform.
    let components = (1..=3)
        .map(|k| Integrand::distance(space.clone(), vec![Point::spider(k, 1.0)]).unwrap())
        .collect();
    let g = Integrand::finite_sum(components).unwrap();

    let baseline = compute_baseline(&g).unwrap();
    println!(
        "exhaustive-search argmin: {:?}, min F = {} (accuracy {})",
        baseline.argmin[0], baseline.min_f, baseline.accuracy
    );

    let cfg = RunConfig::new(g, Point::spider(1, 0.9), StepSchedule::default_power())
        .with_iterations(10_000)
        .with_seed(3)
        .with_reference(baseline.argmin[0].clone());
    let ens = run_splitting_ensemble(&cfg, 20).unwrap();

    let verdict = convergence_verdict(&space, &ens, &baseline.argmin, 1e-2).unwrap();
    println!(
        "replicas within 1e-2 of the median after {} steps: {}/{}",
        cfg.iterations, verdict.converged, verdict.replicas
    );
    println!("final distances: {:?}", &verdict.final_distances[..5.min(verdict.final_distances.len())]);

    // The trace records which component each step drew.
    let counts = ens.traces[0].event.iter().fold([0usize; 3], |mut acc, e| {
        acc[e.parse::<usize>().unwrap()] += 1;
        acc
    });
    println!("component draw counts in replica 0: {counts:?} (uniform by construction)");
}
