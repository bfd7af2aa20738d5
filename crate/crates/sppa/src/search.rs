//! Geodesic pattern search: derivative-free minimization used by the
//! reference solvers and the asymptotic-center estimator.
//!
//! CAT(0) spaces give us moves *toward* a target along the unique geodesic
//! but no extensions, so the search probes geodesics toward a caller-chosen
//! target set, accepts the best strictly improving probe, and halves the
//! step when none improves. For convex objectives whose descent cone is
//! covered by the probe directions this converges to the minimizer down to
//! the step floor.

use crate::geometry::{Point, Space};

/// Minimize `objective` starting from `start`.
///
/// `probe_targets` supplies, for the current point, the targets to probe
/// toward (it may depend on the point, e.g. the farthest window members).
/// Returns the best point found and its objective value.
pub(crate) fn pattern_search(
    space: &Space,
    start: Point,
    objective: impl Fn(&Point) -> f64,
    probe_targets: impl Fn(&Point) -> Vec<Point>,
    init_step: f64,
    step_floor: f64,
) -> (Point, f64) {
    let mut best = start;
    let mut best_val = objective(&best);
    let mut step = init_step.max(step_floor);
    while step >= step_floor {
        let mut improved = false;
        for target in probe_targets(&best) {
            let d = space.distance_unchecked(&best, &target);
            if d == 0.0 {
                continue;
            }
            let candidate = space.geodesic_unchecked(&best, &target, (step / d).min(1.0));
            let val = objective(&candidate);
            if val < best_val {
                best_val = val;
                best = candidate;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_val)
}
