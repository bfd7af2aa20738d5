//! Concrete Hadamard spaces with exact distances and geodesics.
//!
//! Four model families are provided, all complete CAT(0):
//!
//! * `Euclidean(dim)` — flat space, points are coordinate vectors;
//! * `Hyperboloid(dim)` — hyperbolic space on the upper sheet of the
//!   Minkowski quadric `⟨x,x⟩ = −1`, distance `arcosh(−⟨x,y⟩)`;
//! * `Spider(legs)` — an ℝ-tree of `legs` rays glued at a common origin;
//! * `Product(...)` — the l² product of any of the above.
//!
//! Alongside distance and geodesics, [`Space::cn_residual`] evaluates the
//! quadratic comparison inequality that characterizes nonpositive curvature,
//! which the diagnostics use as a sampled certificate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comparison tolerance for geometric identities.
///
/// Double precision leaves ample headroom at desk scales (coordinates up to
/// ~1e3); everything the crate certifies geometrically is certified to this
/// tolerance.
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("space tag mismatch: expected a point of {expected}, got {got}")]
    TagMismatch { expected: String, got: String },
    #[error("invalid point in {space}: {reason}")]
    InvalidPoint { space: String, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid space descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("cannot parse point {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// Descriptor of a concrete Hadamard space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Euclidean { dim: usize },
    Hyperboloid { dim: usize },
    Spider { legs: usize },
    Product { components: Vec<Space> },
}

/// A point of one of the model spaces, tagged by representation.
///
/// Hyperboloid points carry `dim + 1` coordinates and live on the sheet
/// `−x₀² + Σᵢ xᵢ² = −1`, `x₀ ≥ 1`. The spider origin is canonically
/// `leg = 0, radius = 0`; leg indices for interior points run from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Euclidean(Vec<f64>),
    Hyperboloid(Vec<f64>),
    Spider { leg: usize, radius: f64 },
    Product(Vec<Point>),
}

impl Point {
    /// Spider point constructor; canonicalizes radius 0 to the origin (leg 0).
    pub fn spider(leg: usize, radius: f64) -> Point {
        if radius == 0.0 {
            Point::Spider { leg: 0, radius: 0.0 }
        } else {
            Point::Spider { leg, radius }
        }
    }

    pub fn euclidean(coords: impl Into<Vec<f64>>) -> Point {
        Point::Euclidean(coords.into())
    }

    fn kind(&self) -> &'static str {
        match self {
            Point::Euclidean(_) => "euclidean point",
            Point::Hyperboloid(_) => "hyperboloid point",
            Point::Spider { .. } => "spider point",
            Point::Product(_) => "product point",
        }
    }
}

/// Minkowski bilinear form `−x₀y₀ + Σ_{i≥1} xᵢyᵢ`.
fn minkowski(x: &[f64], y: &[f64]) -> f64 {
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Space::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Space::Hyperboloid { dim } => write!(f, "hyperboloid:{dim}"),
            Space::Spider { legs } => write!(f, "spider:{legs}"),
            Space::Product { components } => {
                write!(f, "product:[")?;
                for (i, c) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Space, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::InvalidDescriptor("euclidean dim must be >= 1".into()));
        }
        Ok(Space::Euclidean { dim })
    }

    pub fn hyperboloid(dim: usize) -> Result<Space, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::InvalidDescriptor("hyperboloid dim must be >= 1".into()));
        }
        Ok(Space::Hyperboloid { dim })
    }

    pub fn spider(legs: usize) -> Result<Space, GeometryError> {
        if legs == 0 {
            return Err(GeometryError::InvalidDescriptor("spider needs >= 1 leg".into()));
        }
        Ok(Space::Spider { legs })
    }

    pub fn product(components: Vec<Space>) -> Result<Space, GeometryError> {
        if components.len() < 2 {
            return Err(GeometryError::InvalidDescriptor(
                "product needs >= 2 components".into(),
            ));
        }
        Ok(Space::Product { components })
    }

    /// The distinguished base point: Euclidean origin, hyperboloid apex
    /// `(1, 0, …)`, spider origin, componentwise for products.
    pub fn base_point(&self) -> Point {
        match self {
            Space::Euclidean { dim } => Point::Euclidean(vec![0.0; *dim]),
            Space::Hyperboloid { dim } => {
                let mut v = vec![0.0; dim + 1];
                v[0] = 1.0;
                Point::Hyperboloid(v)
            }
            Space::Spider { .. } => Point::Spider { leg: 0, radius: 0.0 },
            Space::Product { components } => {
                Point::Product(components.iter().map(|c| c.base_point()).collect())
            }
        }
    }

    /// Check that `p` is a valid point of this space.
    pub fn validate(&self, p: &Point) -> Result<(), GeometryError> {
        let mismatch = || GeometryError::TagMismatch {
            expected: self.to_string(),
            got: p.kind().to_string(),
        };
        match (self, p) {
            (Space::Euclidean { dim }, Point::Euclidean(v)) => {
                if v.len() != *dim {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: format!("expected {dim} coordinates, got {}", v.len()),
                    });
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: "non-finite coordinate".into(),
                    });
                }
                Ok(())
            }
            (Space::Hyperboloid { dim }, Point::Hyperboloid(v)) => {
                if v.len() != dim + 1 {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: format!("expected {} coordinates, got {}", dim + 1, v.len()),
                    });
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: "non-finite coordinate".into(),
                    });
                }
                let q = minkowski(v, v);
                if (q + 1.0).abs() > GEOM_TOL {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: format!("off the sheet: <x,x> = {q}, expected -1"),
                    });
                }
                if v[0] < 1.0 - GEOM_TOL {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: format!("x0 = {} < 1 (lower sheet)", v[0]),
                    });
                }
                Ok(())
            }
            (Space::Spider { legs }, Point::Spider { leg, radius }) => {
                if !radius.is_finite() || *radius < 0.0 {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: format!("radius {radius} must be finite and >= 0"),
                    });
                }
                if *radius == 0.0 {
                    if *leg != 0 {
                        return Err(GeometryError::InvalidPoint {
                            space: self.to_string(),
                            reason: "origin must be stored canonically as leg 0".into(),
                        });
                    }
                } else if *leg == 0 || *leg > *legs {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: format!("leg {leg} out of range 1..={legs}"),
                    });
                }
                Ok(())
            }
            (Space::Product { components }, Point::Product(parts)) => {
                if components.len() != parts.len() {
                    return Err(GeometryError::InvalidPoint {
                        space: self.to_string(),
                        reason: format!(
                            "expected {} components, got {}",
                            components.len(),
                            parts.len()
                        ),
                    });
                }
                for (c, q) in components.iter().zip(parts) {
                    c.validate(q)?;
                }
                Ok(())
            }
            _ => Err(mismatch()),
        }
    }

    /// Metric distance `d(x, y)`.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64, GeometryError> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> f64 {
        match (self, x, y) {
            (Space::Euclidean { .. }, Point::Euclidean(a), Point::Euclidean(b)) => {
                let mut s = 0.0;
                for i in 0..a.len() {
                    let d = a[i] - b[i];
                    s += d * d;
                }
                s.sqrt()
            }
            (Space::Hyperboloid { .. }, Point::Hyperboloid(a), Point::Hyperboloid(b)) => {
                // arcosh(-<x,y>) with the inner product clamped to <= -1 is the
                // model distance, but arcosh is ill-conditioned near 1: one ulp
                // of sheet drift inflates d(x,x) to ~1e-8. Rewrite through the
                // Minkowski chord m = <x-y, x-y> (= -2 - 2<x,y> on the sheet,
                // and exactly 0 for identical points): d = 2 asinh(sqrt(m)/2).
                let diff: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| ai - bi).collect();
                let m = minkowski(&diff, &diff).max(0.0);
                2.0 * (m.sqrt() / 2.0).asinh()
            }
            (
                Space::Spider { .. },
                Point::Spider { leg: la, radius: ra },
                Point::Spider { leg: lb, radius: rb },
            ) => {
                if la == lb || *ra == 0.0 || *rb == 0.0 {
                    (ra - rb).abs()
                } else {
                    ra + rb
                }
            }
            (Space::Product { components }, Point::Product(a), Point::Product(b)) => {
                let mut s = 0.0;
                for (i, c) in components.iter().enumerate() {
                    let d = c.distance_unchecked(&a[i], &b[i]);
                    s += d * d;
                }
                s.sqrt()
            }
            _ => unreachable!("validated"),
        }
    }

    /// The point `γ(t·d(x,y))` on the unique geodesic from `x` to `y`.
    ///
    /// `t` must lie in `[0, 1]`; geodesic extension is deliberately
    /// unsupported (extensions need not exist or be unique in ℝ-trees).
    pub fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point, GeometryError> {
        self.validate(x)?;
        self.validate(y)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(GeometryError::Domain(format!(
                "geodesic parameter t = {t} outside [0, 1]"
            )));
        }
        Ok(self.geodesic_unchecked(x, y, t))
    }

    pub(crate) fn geodesic_unchecked(&self, x: &Point, y: &Point, t: f64) -> Point {
        if t == 0.0 {
            return x.clone();
        }
        if t == 1.0 {
            return y.clone();
        }
        match (self, x, y) {
            (Space::Euclidean { .. }, Point::Euclidean(a), Point::Euclidean(b)) => {
                Point::Euclidean(
                    a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect(),
                )
            }
            (Space::Hyperboloid { .. }, Point::Hyperboloid(a), Point::Hyperboloid(b)) => {
                let d = self.distance_unchecked(x, y);
                if d < 1e-14 {
                    return x.clone();
                }
                let (cd, sd) = (d.cosh(), d.sinh());
                let s = t * d;
                let (cs, ss) = (s.cosh(), s.sinh());
                // Unit tangent at x pointing to y: u = (y - cosh(d) x) / sinh(d).
                let mut g: Vec<f64> = (0..a.len())
                    .map(|i| cs * a[i] + ss * (b[i] - cd * a[i]) / sd)
                    .collect();
                // Renormalize onto the sheet.
                let norm = (-minkowski(&g, &g)).sqrt();
                for gi in &mut g {
                    *gi /= norm;
                }
                Point::Hyperboloid(g)
            }
            (
                Space::Spider { .. },
                Point::Spider { leg: la, radius: ra },
                Point::Spider { leg: lb, radius: rb },
            ) => {
                if la == lb || *ra == 0.0 || *rb == 0.0 {
                    // Single leg (the origin lies on every leg).
                    let leg = if *ra == 0.0 { *lb } else { *la };
                    Point::spider(leg, (ra + t * (rb - ra)).max(0.0))
                } else {
                    // Through the origin: in along x's leg, out along y's.
                    let s = t * (ra + rb);
                    if s <= *ra {
                        Point::spider(*la, ra - s)
                    } else {
                        Point::spider(*lb, s - ra)
                    }
                }
            }
            (Space::Product { components }, Point::Product(a), Point::Product(b)) => {
                Point::Product(
                    components
                        .iter()
                        .enumerate()
                        .map(|(i, c)| c.geodesic_unchecked(&a[i], &b[i], t))
                        .collect(),
                )
            }
            _ => unreachable!("validated"),
        }
    }

    /// Residual of the nonpositive-curvature comparison inequality with the
    /// geodesic joining `a` and `b`:
    ///
    /// `(1−t)d²(a,x) + t·d²(b,x) − t(1−t)d²(a,b) − d²(γ(t), x)`.
    ///
    /// Nonnegative (within [`GEOM_TOL`]) in every implemented space; zero in
    /// Euclidean space, which is the equality case.
    pub fn cn_residual(
        &self,
        x: &Point,
        a: &Point,
        b: &Point,
        t: f64,
    ) -> Result<f64, GeometryError> {
        let mid = self.geodesic(a, b, t)?;
        self.validate(x)?;
        let dax = self.distance_unchecked(a, x);
        let dbx = self.distance_unchecked(b, x);
        let dab = self.distance_unchecked(a, b);
        let dmx = self.distance_unchecked(&mid, x);
        Ok((1.0 - t) * dax * dax + t * dbx * dbx - t * (1.0 - t) * dab * dab - dmx * dmx)
    }

    /// Number of `;`-separated atoms in the text encoding of a point.
    pub(crate) fn leaf_count(&self) -> usize {
        match self {
            Space::Product { components } => components.iter().map(Space::leaf_count).sum(),
            _ => 1,
        }
    }
}

mod random {
    use super::*;
    use crate::rng::Stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Uniform direction + radial rescale: a point of the `dim`-ball of
    /// radius `scale`, centered at the origin.
    fn ball_vector(dim: usize, scale: f64, stream: &mut Stream) -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| stream.sample(StandardNormal)).collect();
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return vec![0.0; dim];
        }
        let u: f64 = stream.gen();
        let r = scale * u.powf(1.0 / dim as f64);
        v.into_iter().map(|c| c * r / norm).collect()
    }

    impl Space {
        /// A valid point within distance `scale` of the base point,
        /// deterministic given the stream state.
        pub fn random_point(&self, stream: &mut Stream, scale: f64) -> Point {
            match self {
                Space::Euclidean { dim } => Point::Euclidean(ball_vector(*dim, scale, stream)),
                Space::Hyperboloid { dim } => {
                    // Exponential map of a random tangent vector at the apex.
                    let v = ball_vector(*dim, scale, stream);
                    let r: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if r < 1e-15 {
                        return self.base_point();
                    }
                    let mut g = Vec::with_capacity(dim + 1);
                    g.push(r.cosh());
                    let sr = r.sinh();
                    g.extend(v.iter().map(|c| sr * c / r));
                    let norm = (-minkowski(&g, &g)).sqrt();
                    Point::Hyperboloid(g.into_iter().map(|c| c / norm).collect())
                }
                Space::Spider { legs } => {
                    let leg = stream.gen_range(1..=*legs);
                    let radius = stream.gen_range(0.0..=scale);
                    Point::spider(leg, radius)
                }
                Space::Product { components } => {
                    let per = scale / (components.len() as f64).sqrt();
                    Point::Product(
                        components
                            .iter()
                            .map(|c| c.random_point(stream, per))
                            .collect(),
                    )
                }
            }
        }

        /// A point within distance `radius` of `center`: draws a target point
        /// and walks a uniform fraction of `radius` along the geodesic from
        /// `center` toward it.
        pub fn random_point_near(
            &self,
            stream: &mut Stream,
            center: &Point,
            radius: f64,
        ) -> Result<Point, GeometryError> {
            self.validate(center)?;
            let spread = radius + self.distance_unchecked(&self.base_point(), center) + 1.0;
            let target = self.random_point(stream, spread);
            let d = self.distance_unchecked(center, &target);
            if d == 0.0 {
                return Ok(center.clone());
            }
            let step: f64 = stream.gen_range(0.0..=radius);
            let t = (step / d).min(1.0);
            Ok(self.geodesic_unchecked(center, &target, t))
        }
    }
}

/// Point text encoding.
///
/// One point per line: Euclidean coordinates are comma-separated reals,
/// hyperboloid points carry `dim + 1` of them, spider points are
/// `leg,radius`, and product points join their component encodings with `;`.
/// Anchor files may append one trailing weight field to the last atom.
pub mod text {
    use super::*;

    pub fn format_point(space: &Space, p: &Point) -> String {
        match (space, p) {
            (Space::Euclidean { .. }, Point::Euclidean(v))
            | (Space::Hyperboloid { .. }, Point::Hyperboloid(v)) => v
                .iter()
                .map(|c| format!("{c}"))
                .collect::<Vec<_>>()
                .join(","),
            (Space::Spider { .. }, Point::Spider { leg, radius }) => format!("{leg},{radius}"),
            (Space::Product { components }, Point::Product(parts)) => components
                .iter()
                .zip(parts)
                .map(|(c, q)| format_point(c, q))
                .collect::<Vec<_>>()
                .join(";"),
            _ => unreachable!("tag mismatch in format_point"),
        }
    }

    fn parse_err(input: &str, reason: impl Into<String>) -> GeometryError {
        GeometryError::Parse { input: input.to_string(), reason: reason.into() }
    }

    fn parse_fields(input: &str, atom: &str) -> Result<Vec<f64>, GeometryError> {
        atom.split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(input, format!("bad number {f:?}: {e}")))
            })
            .collect()
    }

    /// Expected comma-field count of one leaf atom.
    fn leaf_fields(space: &Space) -> usize {
        match space {
            Space::Euclidean { dim } => *dim,
            Space::Hyperboloid { dim } => dim + 1,
            Space::Spider { .. } => 2,
            Space::Product { .. } => unreachable!("leaf only"),
        }
    }

    fn point_from_atom(
        space: &Space,
        input: &str,
        fields: &[f64],
    ) -> Result<Point, GeometryError> {
        let p = match space {
            Space::Euclidean { .. } => Point::Euclidean(fields.to_vec()),
            Space::Hyperboloid { .. } => Point::Hyperboloid(fields.to_vec()),
            Space::Spider { .. } => {
                let leg = fields[0];
                if leg < 0.0 || leg.fract() != 0.0 {
                    return Err(parse_err(input, format!("leg index {leg} is not an integer")));
                }
                Point::spider(leg as usize, fields[1])
            }
            Space::Product { .. } => unreachable!("leaf only"),
        };
        space.validate(&p)?;
        Ok(p)
    }

    /// Parse a point, optionally followed by a trailing weight field
    /// appended to the last atom.
    pub fn parse_point_weighted(
        space: &Space,
        line: &str,
    ) -> Result<(Point, Option<f64>), GeometryError> {
        let atoms: Vec<&str> = line.trim().split(';').collect();
        if atoms.len() != space.leaf_count() {
            return Err(parse_err(
                line,
                format!("expected {} atoms for {space}, got {}", space.leaf_count(), atoms.len()),
            ));
        }
        let mut idx = 0usize;
        let mut weight = None;
        let total = atoms.len();
        let point = build(space, line, &atoms, &mut idx, total, &mut weight)?;
        return Ok((point, weight));

        fn build(
            space: &Space,
            input: &str,
            atoms: &[&str],
            idx: &mut usize,
            total: usize,
            weight: &mut Option<f64>,
        ) -> Result<Point, GeometryError> {
            match space {
                Space::Product { components } => {
                    let parts = components
                        .iter()
                        .map(|c| build(c, input, atoms, idx, total, weight))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Point::Product(parts))
                }
                leaf => {
                    let atom = atoms[*idx];
                    let last = *idx == total - 1;
                    *idx += 1;
                    let mut fields = parse_fields(input, atom)?;
                    let expected = leaf_fields(leaf);
                    if last && fields.len() == expected + 1 {
                        *weight = Some(fields.pop().unwrap());
                    } else if fields.len() != expected {
                        return Err(parse_err(
                            input,
                            format!(
                                "atom {atom:?} has {} fields, expected {expected}",
                                fields.len()
                            ),
                        ));
                    }
                    point_from_atom(leaf, input, &fields)
                }
            }
        }
    }

    /// Parse a bare point (no weight field allowed).
    pub fn parse_point(space: &Space, line: &str) -> Result<Point, GeometryError> {
        let (p, w) = parse_point_weighted(space, line)?;
        if w.is_some() {
            return Err(parse_err(line, "unexpected trailing weight field"));
        }
        Ok(p)
    }

    /// Parse an anchor file: one point per line, optional trailing weight
    /// column (default 1), blank lines and `#` comments skipped.
    pub fn parse_anchor_file(
        space: &Space,
        contents: &str,
    ) -> Result<Vec<(Point, f64)>, GeometryError> {
        let mut out = Vec::new();
        for line in contents.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (p, w) = parse_point_weighted(space, line)?;
            out.push((p, w.unwrap_or(1.0)));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;
    use approx::assert_abs_diff_eq;

    fn spaces() -> Vec<Space> {
        vec![
            Space::euclidean(3).unwrap(),
            Space::hyperboloid(2).unwrap(),
            Space::spider(3).unwrap(),
            Space::product(vec![Space::euclidean(2).unwrap(), Space::spider(3).unwrap()])
                .unwrap(),
        ]
    }

    #[test]
    fn euclidean_identity() {
        let s = Space::euclidean(2).unwrap();
        let x = Point::euclidean([0.0, 0.0]);
        assert_eq!(s.distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn hyperboloid_unit_distance() {
        // arcosh(cosh 1) = 1 by the model definition.
        let s = Space::hyperboloid(2).unwrap();
        let x = Point::Hyperboloid(vec![1.0, 0.0, 0.0]);
        let y = Point::Hyperboloid(vec![1f64.cosh(), 1f64.sinh(), 0.0]);
        assert_abs_diff_eq!(s.distance(&x, &y).unwrap(), 1.0, epsilon = GEOM_TOL);
    }

    #[test]
    fn spider_metric_through_origin() {
        let s = Space::spider(3).unwrap();
        let x = Point::spider(1, 1.0);
        let y = Point::spider(2, 3.0);
        assert_eq!(s.distance(&x, &y).unwrap(), 4.0);
    }

    #[test]
    fn spider_geodesic_crosses_origin() {
        // d = 4; traveling 2 from (leg 1, 1) passes the origin and continues
        // 1 along leg 2.
        let s = Space::spider(3).unwrap();
        let x = Point::spider(1, 1.0);
        let y = Point::spider(2, 3.0);
        let m = s.geodesic(&x, &y, 0.5).unwrap();
        assert_eq!(m, Point::spider(2, 1.0));
    }

    #[test]
    fn geodesic_endpoints_exact() {
        let mut stream = stream_from_seed(1);
        for s in spaces() {
            let x = s.random_point(&mut stream, 2.0);
            let y = s.random_point(&mut stream, 2.0);
            assert_eq!(s.geodesic(&x, &y, 0.0).unwrap(), x);
            assert_eq!(s.geodesic(&x, &y, 1.0).unwrap(), y);
        }
    }

    #[test]
    fn euclidean_midpoint() {
        let s = Space::euclidean(2).unwrap();
        let x = Point::euclidean([0.0, 0.0]);
        let y = Point::euclidean([2.0, 0.0]);
        assert_eq!(s.geodesic(&x, &y, 0.5).unwrap(), Point::euclidean([1.0, 0.0]));
    }

    #[test]
    fn geodesic_rejects_extension() {
        let s = Space::euclidean(1).unwrap();
        let x = Point::euclidean([0.0]);
        let y = Point::euclidean([1.0]);
        assert!(matches!(s.geodesic(&x, &y, 1.5), Err(GeometryError::Domain(_))));
        assert!(matches!(s.geodesic(&x, &y, -0.1), Err(GeometryError::Domain(_))));
    }

    #[test]
    fn cn_residual_zero_at_t0() {
        let mut stream = stream_from_seed(2);
        for s in spaces() {
            let x = s.random_point(&mut stream, 2.0);
            let a = s.random_point(&mut stream, 2.0);
            let b = s.random_point(&mut stream, 2.0);
            assert_eq!(s.cn_residual(&x, &a, &b, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn spider_cn_residual_strictly_positive() {
        // Hand oracle: d(a,x) = d(b,x) = d(a,b) = 2, midpoint of [a,b] is the
        // origin at distance 1 from x, so the residual is
        // 0.5*4 + 0.5*4 - 0.25*4 - 1 = 2.
        let s = Space::spider(3).unwrap();
        let x = Point::spider(3, 1.0);
        let a = Point::spider(1, 1.0);
        let b = Point::spider(2, 1.0);
        let r = s.cn_residual(&x, &a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = GEOM_TOL);
    }

    #[test]
    fn euclidean_cn_equality() {
        let s = Space::euclidean(3).unwrap();
        let mut stream = stream_from_seed(3);
        for _ in 0..100 {
            let x = s.random_point(&mut stream, 5.0);
            let a = s.random_point(&mut stream, 5.0);
            let b = s.random_point(&mut stream, 5.0);
            let t = 0.3;
            assert_abs_diff_eq!(s.cn_residual(&x, &a, &b, t).unwrap(), 0.0, epsilon = GEOM_TOL);
        }
    }

    #[test]
    fn random_points_valid_and_in_range() {
        let mut stream = stream_from_seed(4);
        for s in spaces() {
            let base = s.base_point();
            for _ in 0..200 {
                let p = s.random_point(&mut stream, 1.5);
                s.validate(&p).unwrap();
                assert!(s.distance(&base, &p).unwrap() <= 1.5 + GEOM_TOL);
            }
        }
    }

    #[test]
    fn random_point_deterministic() {
        for s in spaces() {
            let a = s.random_point(&mut stream_from_seed(9), 1.0);
            let b = s.random_point(&mut stream_from_seed(9), 1.0);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn random_point_near_stays_in_ball() {
        let mut stream = stream_from_seed(5);
        for s in spaces() {
            let center = s.random_point(&mut stream, 2.0);
            for _ in 0..200 {
                let p = s.random_point_near(&mut stream, &center, 0.7).unwrap();
                s.validate(&p).unwrap();
                assert!(s.distance(&center, &p).unwrap() <= 0.7 + GEOM_TOL);
            }
        }
    }

    #[test]
    fn hyperboloid_outputs_stay_on_sheet() {
        let s = Space::hyperboloid(3).unwrap();
        let mut stream = stream_from_seed(6);
        for _ in 0..500 {
            let x = s.random_point(&mut stream, 3.0);
            let y = s.random_point(&mut stream, 3.0);
            let g = s.geodesic(&x, &y, 0.37).unwrap();
            if let Point::Hyperboloid(v) = &g {
                assert!((minkowski(v, v) + 1.0).abs() <= GEOM_TOL);
            } else {
                panic!("wrong tag");
            }
        }
    }

    #[test]
    fn tag_mismatch_detected() {
        let s = Space::euclidean(2).unwrap();
        let x = Point::euclidean([0.0, 0.0]);
        let y = Point::spider(1, 1.0);
        assert!(matches!(s.distance(&x, &y), Err(GeometryError::TagMismatch { .. })));
    }

    #[test]
    fn invalid_hyperboloid_point_rejected() {
        let s = Space::hyperboloid(2).unwrap();
        let off_sheet = Point::Hyperboloid(vec![1.0, 1.0, 0.0]);
        assert!(matches!(
            s.validate(&off_sheet),
            Err(GeometryError::InvalidPoint { .. })
        ));
    }

    #[test]
    fn spider_origin_canonical() {
        let s = Space::spider(2).unwrap();
        assert_eq!(Point::spider(2, 0.0), Point::Spider { leg: 0, radius: 0.0 });
        let non_canonical = Point::Spider { leg: 1, radius: 0.0 };
        assert!(s.validate(&non_canonical).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut stream = stream_from_seed(7);
        for s in spaces() {
            for _ in 0..50 {
                let p = s.random_point(&mut stream, 2.0);
                let enc = text::format_point(&s, &p);
                let q = text::parse_point(&s, &enc).unwrap();
                assert!(s.distance(&p, &q).unwrap() <= GEOM_TOL, "{s}: {enc}");
            }
        }
    }

    #[test]
    fn anchor_file_with_weights() {
        let s = Space::spider(3).unwrap();
        let contents = "# anchors\n1,1.0\n2,1.0,2.5\n\n3,0.25\n";
        let anchors = text::parse_anchor_file(&s, contents).unwrap();
        assert_eq!(anchors.len(), 3);
        assert_eq!(anchors[0], (Point::spider(1, 1.0), 1.0));
        assert_eq!(anchors[1], (Point::spider(2, 1.0), 2.5));
        assert_eq!(anchors[2], (Point::spider(3, 0.25), 1.0));
    }

    #[test]
    fn product_anchor_line_weight() {
        let s = Space::product(vec![Space::euclidean(2).unwrap(), Space::spider(2).unwrap()])
            .unwrap();
        let (p, w) = text::parse_point_weighted(&s, "1,2;1,0.5,3.0").unwrap();
        assert_eq!(w, Some(3.0));
        assert_eq!(
            p,
            Point::Product(vec![Point::euclidean([1.0, 2.0]), Point::spider(1, 0.5)])
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn metric_axioms_sampled(seed in 0u64..1_000_000) {
                let mut stream = stream_from_seed(seed);
                for s in spaces() {
                    let x = s.random_point(&mut stream, 3.0);
                    let y = s.random_point(&mut stream, 3.0);
                    let z = s.random_point(&mut stream, 3.0);
                    let dxy = s.distance(&x, &y).unwrap();
                    let dyx = s.distance(&y, &x).unwrap();
                    prop_assert_eq!(dxy, dyx);
                    let dxz = s.distance(&x, &z).unwrap();
                    let dyz = s.distance(&y, &z).unwrap();
                    prop_assert!(dxz <= dxy + dyz + GEOM_TOL);
                    prop_assert_eq!(s.distance(&x, &x).unwrap(), 0.0);
                }
            }

            #[test]
            fn geodesic_additivity(seed in 0u64..1_000_000, s_frac in 0.0f64..1.0, t_frac in 0.0f64..1.0) {
                let (lo, hi) = if s_frac <= t_frac { (s_frac, t_frac) } else { (t_frac, s_frac) };
                let mut stream = stream_from_seed(seed);
                for sp in spaces() {
                    let x = sp.random_point(&mut stream, 3.0);
                    let y = sp.random_point(&mut stream, 3.0);
                    let d = sp.distance(&x, &y).unwrap();
                    let gs = sp.geodesic(&x, &y, lo).unwrap();
                    let gt = sp.geodesic(&x, &y, hi).unwrap();
                    let seg = sp.distance(&gs, &gt).unwrap();
                    prop_assert!((seg - (hi - lo) * d).abs() <= GEOM_TOL);
                }
            }

            #[test]
            fn cn_residual_nonnegative(seed in 0u64..1_000_000, t in 0.0f64..1.0) {
                let mut stream = stream_from_seed(seed);
                for sp in spaces() {
                    let x = sp.random_point(&mut stream, 3.0);
                    let a = sp.random_point(&mut stream, 3.0);
                    let b = sp.random_point(&mut stream, 3.0);
                    prop_assert!(sp.cn_residual(&x, &a, &b, t).unwrap() >= -GEOM_TOL);
                }
            }

            // Point ingestion must reject junk with an error, never a panic.
            #[test]
            fn parse_point_never_panics(line in ".{0,80}") {
                for sp in spaces() {
                    let _ = text::parse_point_weighted(&sp, &line);
                }
            }
        }
    }
}
