//! Registering a user-supplied proximal rule: the registration gate samples
//! the proximal inequality and nonexpansiveness before admitting it, so a
//! broken rule never reaches the engine.
//!
//! ```bash
//! cargo run --release --example external_prox
//! ```

use std::sync::Arc;

use sppa::engine::{run_sppa, RunConfig};
use sppa::geometry::{Point, Space};
use sppa::integrand::{Event, EventSpace, ExternalOracle, Integrand};
use sppa::schedule::StepSchedule;

/// Huber-style objective f(x) = sum of a smooth well around the origin:
/// quadratic inside |x| <= delta, linear outside. Its prox has a closed
/// form in each regime.
struct Huber {
    delta: f64,
}

impl Huber {
    fn radius(&self, x: &Point) -> f64 {
        match x {
            Point::Euclidean(v) => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
            _ => f64::NAN,
        }
    }

    fn scale(x: &Point, s: f64) -> Point {
        match x {
            Point::Euclidean(v) => Point::Euclidean(v.iter().map(|c| c * s).collect()),
            _ => x.clone(),
        }
    }
}

impl ExternalOracle for Huber {
    fn eval(&self, _event: &Event, x: &Point) -> f64 {
        let r = self.radius(x);
        if r <= self.delta {
            0.5 * r * r
        } else {
            self.delta * (r - 0.5 * self.delta)
        }
    }

    fn prox(&self, lambda: f64, _event: &Event, x: &Point) -> Point {
        let r = self.radius(x);
        if r == 0.0 {
            return x.clone();
        }
        // quadratic regime: shrink by 1/(1+lambda); linear: soft threshold
        let shrunk = r / (1.0 + lambda);
        let target = if shrunk <= self.delta { shrunk } else { (r - lambda * self.delta).max(self.delta) };
        Huber::scale(x, target / r)
    }

    fn growth(&self, _event: &Event) -> f64 {
        // |f(x) - f(y)| <= delta-Lipschitz outside, slope <= delta inside
        self.delta.max(1.0)
    }
}

struct Overshooting;

impl ExternalOracle for Overshooting {
    fn eval(&self, _event: &Event, x: &Point) -> f64 {
        match x {
            Point::Euclidean(v) => 0.5 * v.iter().map(|c| c * c).sum::<f64>(),
            _ => f64::INFINITY,
        }
    }

    fn prox(&self, lambda: f64, _event: &Event, x: &Point) -> Point {
        // Twice the correct contraction: not a proximal map.
        let t = (2.0 * lambda / (1.0 + lambda)).min(1.0);
        Huber::scale(x, 1.0 - t)
    }

    fn growth(&self, _event: &Event) -> f64 {
        10.0
    }
}

fn main() {
    let space = Space::euclidean(2).unwrap();
    let events = EventSpace::uniform(1).unwrap();

    println!("registering a correct Huber prox rule...");
    let g = Integrand::external(
        space.clone(),
        events.clone(),
        Arc::new(Huber { delta: 0.5 }),
        5.0,
        99,
        2000,
    )
    .expect("the gate admits a correct rule");
    println!("  admitted.\n");

    let cfg = RunConfig::new(g, Point::euclidean([3.0, 1.0]), StepSchedule::default_power())
        .with_iterations(5000)
        .with_seed(1)
        .with_reference(Point::euclidean([0.0, 0.0]));
    let trace = run_sppa(&cfg).unwrap();
    println!(
        "after {} steps: d(x_N, 0) = {:.6} (the well bottom is the origin)",
        cfg.iterations,
        trace.dist_ref.as_ref().unwrap().last().unwrap()
    );

    println!("\nregistering a rule that overshoots the minimizer...");
    match Integrand::external(space, events, Arc::new(Overshooting), 5.0, 99, 2000) {
        Err(e) => println!("  rejected as it must be: {e}"),
        Ok(_) => unreachable!("the gate cannot admit an overshooting rule"),
    }
}
