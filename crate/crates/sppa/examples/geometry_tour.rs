//! Tour of the model spaces: distances, geodesics, the nonpositive-curvature
//! comparison inequality, and the point text encoding.
//!
//! ```bash
//! cargo run --release --example geometry_tour
//! ```

use sppa::geometry::{text, Point, Space, GEOM_TOL};
use sppa::rng::stream_from_seed;

fn main() {
    println!("=== Model spaces ===\n");

    // Euclidean
    let e2 = Space::euclidean(2).unwrap();
    let x = Point::euclidean([0.0, 0.0]);
    let y = Point::euclidean([2.0, 0.0]);
    println!("euclidean:2  d((0,0),(2,0))        = {}", e2.distance(&x, &y).unwrap());
    println!("             midpoint              = {:?}", e2.geodesic(&x, &y, 0.5).unwrap());

    // Hyperboloid: distance along the sheet is arcosh of the Minkowski form.
    let h2 = Space::hyperboloid(2).unwrap();
    let apex = h2.base_point();
    let far = Point::Hyperboloid(vec![1f64.cosh(), 1f64.sinh(), 0.0]);
    println!("hyperboloid:2  d(apex, exp(1))     = {}", h2.distance(&apex, &far).unwrap());

    // Spider: an R-tree of rays glued at the origin.
    let s3 = Space::spider(3).unwrap();
    let a = Point::spider(1, 1.0);
    let b = Point::spider(2, 3.0);
    println!("spider:3    d((leg1,1),(leg2,3))   = {}", s3.distance(&a, &b).unwrap());
    println!("            halfway point          = {:?}", s3.geodesic(&a, &b, 0.5).unwrap());

    // Products combine componentwise with the l2 metric.
    let prod = Space::product(vec![e2.clone(), s3.clone()]).unwrap();
    let p = Point::Product(vec![x.clone(), a.clone()]);
    let q = Point::Product(vec![y.clone(), b.clone()]);
    println!("product     d = sqrt(2^2 + 4^2)    = {}", prod.distance(&p, &q).unwrap());

    println!("\n=== Comparison inequality (sampled) ===\n");
    // The residual is zero in Euclidean space (the equality case) and
    // nonnegative everywhere else; strictly positive residuals witness
    // genuinely negative curvature.
    let spaces = [e2.clone(), h2.clone(), s3.clone(), prod.clone()];
    let mut stream = stream_from_seed(1);
    for space in &spaces {
        let mut worst = f64::INFINITY;
        let mut best: f64 = 0.0;
        for _ in 0..2000 {
            let x = space.random_point(&mut stream, 2.0);
            let a = space.random_point(&mut stream, 2.0);
            let b = space.random_point(&mut stream, 2.0);
            let r = space.cn_residual(&x, &a, &b, 0.5).unwrap();
            worst = worst.min(r);
            best = best.max(r);
        }
        println!("{space:<34} residual range [{worst:+.2e}, {best:+.2e}]");
        assert!(worst >= -GEOM_TOL);
    }
    // The three-legged witness: the midpoint of two legs is the origin.
    let r = s3
        .cn_residual(&Point::spider(3, 1.0), &Point::spider(1, 1.0), &Point::spider(2, 1.0), 0.5)
        .unwrap();
    println!("\nspider residual at the symmetric triple: {r} (strictly positive)");

    println!("\n=== Point text encoding ===\n");
    for (space, point) in [
        (e2, Point::euclidean([0.25, -1.5])),
        (h2, far),
        (s3, b),
        (prod, q),
    ] {
        let enc = text::format_point(&space, &point);
        let back = text::parse_point(&space, &enc).unwrap();
        println!("{space:<34} {enc:<40} round-trip d = {}", space.distance(&point, &back).unwrap());
    }
}
