//! Sampleable convex objective families `f(e, ·)` with event distributions,
//! growth data, and exact proximal maps.
//!
//! Built-in families:
//!
//! * squared distance — `f(e, x) = (w_e / 2) d²(x, a_e)`, the Fréchet-mean
//!   objective;
//! * distance — `f(e, x) = w_e d(x, a_e)`, the geodesic-median objective;
//! * finite sums of deterministic components with uniform component draws,
//!   the input of the random-order splitting iteration;
//! * external — user-supplied eval/prox rules, admitted only after passing
//!   the proximal-inequality and nonexpansiveness gates at registration.
//!
//! Both built-in proximal maps move along the geodesic from the iterate
//! toward the event's anchor, which is exact in every CAT(0) space.
//!
//! Each integrand carries a growth bound `L(e)` with
//! `f(e,x) − f(e,y) ≤ L(e)(1 + d(x,p)) d(x,y)`. For the distance family
//! `L(e) = w_e` holds globally; squared distance admits no state-free global
//! bound, so its `L(e) = w_e (1 + R_a + R)` is certified on the ball of
//! radius `R` (the operating radius) around the base point `p`, where `R_a`
//! bounds the anchor distances from `p`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point, Space, GEOM_TOL};
use crate::rng::Stream;
use rand::Rng;

/// Sum tolerance for probability weight vectors.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IntegrandError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid integrand: {0}")]
    Invalid(String),
    #[error("unknown event: {0}")]
    UnknownEvent(String),
    #[error("external prox rule rejected at registration: {0}")]
    GateFailed(String),
}

type Result<T> = std::result::Result<T, IntegrandError>;

/// One draw from the event space.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Index into a finite event space.
    Index(usize),
    /// Event produced by a generator rule, carrying its own anchor data.
    Generated { anchor: Point, weight: f64 },
}

impl Event {
    /// Short text form for trace rows.
    pub fn describe(&self, space: &Space) -> String {
        match self {
            Event::Index(k) => k.to_string(),
            Event::Generated { anchor, .. } => crate::geometry::text::format_point(space, anchor),
        }
    }
}

/// Parametric rule producing anchor-and-weight events: anchors drawn
/// uniformly from the geodesic ball of `radius` around `center`, constant
/// function weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRule {
    pub center: Point,
    pub radius: f64,
    pub weight: f64,
}

/// The event space `(E, ℰ, µ)`.
///
/// Sampling weights are normalized to probabilities at construction, so the
/// stored finite distributions always sum to 1 within [`PROB_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSpace {
    /// Events `0..n` with probability weights; anchors live on the integrand.
    Finite { probs: Vec<f64> },
    /// Anchor points with sampling weights; events are anchor indices.
    AnchorSampler { anchors: Vec<Point>, probs: Vec<f64> },
    /// Parametric anchor-and-weight generator (a non-finite event space).
    Generator(GeneratorRule),
}

fn normalize_probs(weights: Vec<f64>) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(IntegrandError::Invalid("event space must be nonempty".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(IntegrandError::Invalid("sampling weights must be finite and >= 0".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(IntegrandError::Invalid("sampling weights sum to zero".into()));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

impl EventSpace {
    pub fn finite(weights: Vec<f64>) -> Result<EventSpace> {
        Ok(EventSpace::Finite { probs: normalize_probs(weights)? })
    }

    pub fn uniform(n: usize) -> Result<EventSpace> {
        EventSpace::finite(vec![1.0; n])
    }

    pub fn anchor_sampler(anchors: Vec<Point>, weights: Vec<f64>) -> Result<EventSpace> {
        if anchors.len() != weights.len() {
            return Err(IntegrandError::Invalid(format!(
                "{} anchors but {} sampling weights",
                anchors.len(),
                weights.len()
            )));
        }
        Ok(EventSpace::AnchorSampler { anchors, probs: normalize_probs(weights)? })
    }

    /// Probability weights of a finite event space, `None` for generators.
    pub fn probs(&self) -> Option<&[f64]> {
        match self {
            EventSpace::Finite { probs } | EventSpace::AnchorSampler { probs, .. } => Some(probs),
            EventSpace::Generator(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.probs().is_some()
    }

    /// Whether expectations over this space are computed exactly (the
    /// `Finite` kind). Anchor samplers and generators go through Monte Carlo.
    pub fn exact_expectation(&self) -> bool {
        matches!(self, EventSpace::Finite { .. })
    }

    /// Whether a finite distribution is uniform (within [`PROB_TOL`] per event).
    pub fn is_uniform(&self) -> bool {
        match self.probs() {
            Some(probs) => {
                let u = 1.0 / probs.len() as f64;
                probs.iter().all(|p| (p - u).abs() <= PROB_TOL)
            }
            None => false,
        }
    }

    /// Draw one event; deterministic given the stream state.
    pub fn sample(&self, space: &Space, stream: &mut Stream) -> Event {
        match self {
            EventSpace::Finite { probs } | EventSpace::AnchorSampler { probs, .. } => {
                let u: f64 = stream.gen();
                let mut acc = 0.0;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Event::Index(k);
                    }
                }
                Event::Index(probs.len() - 1)
            }
            EventSpace::Generator(rule) => {
                let anchor = space
                    .random_point_near(stream, &rule.center, rule.radius)
                    .expect("generator center validated at construction");
                Event::Generated { anchor, weight: rule.weight }
            }
        }
    }
}

/// Public tag of the objective family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    SquaredDistance,
    Distance,
    FiniteSum,
    External,
}

/// Objective family tag; the per-event data lives on [`Integrand`].
#[derive(Clone)]
enum Family {
    SquaredDistance,
    Distance,
    FiniteSum { components: Vec<Integrand> },
    External(Arc<dyn ExternalOracle>),
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::SquaredDistance => write!(f, "SquaredDistance"),
            Family::Distance => write!(f, "Distance"),
            Family::FiniteSum { components } => {
                write!(f, "FiniteSum({} components)", components.len())
            }
            Family::External(_) => write!(f, "External"),
        }
    }
}

/// User-supplied objective with its own proximal rule.
///
/// Implementations must satisfy the proximal inequality
/// `f(e, prox) − f(e, y) ≤ [d²(x,y) − d²(prox,y)] / (2λ)` and be
/// nonexpansive in `x`; both are sampled at registration and violations
/// reject the integrand.
pub trait ExternalOracle: Send + Sync {
    fn eval(&self, event: &Event, x: &Point) -> f64;
    fn prox(&self, lambda: f64, event: &Event, x: &Point) -> Point;
    /// Growth bound `L(e)` valid on the operating ball.
    fn growth(&self, event: &Event) -> f64;
}

/// A normal convex integrand `f(e, x)` over one of the model spaces.
#[derive(Debug, Clone)]
pub struct Integrand {
    space: Space,
    family: Family,
    events: EventSpace,
    /// Anchors for `Finite` event spaces (anchor-sampler spaces carry their own).
    anchors: Vec<Point>,
    /// Function weights `w_e` per finite event.
    weights: Vec<f64>,
    /// The growth-condition base point `p`.
    base_point: Point,
    /// Radius of the ball around `p` on which the growth bound is certified.
    operating_radius: f64,
    /// Cached bound on `d(a_e, p)` over events.
    anchor_spread: f64,
}

/// Default certified-growth ball radius around the base point.
pub const DEFAULT_OPERATING_RADIUS: f64 = 10.0;

impl Integrand {
    fn build_anchor_family(
        family: Family,
        space: Space,
        anchors: Vec<Point>,
        events: Option<EventSpace>,
    ) -> Result<Integrand> {
        if anchors.is_empty() {
            return Err(IntegrandError::Invalid("need at least one anchor".into()));
        }
        for a in &anchors {
            space.validate(a)?;
        }
        let events = match events {
            Some(e) => e,
            None => EventSpace::uniform(anchors.len())?,
        };
        let n = match &events {
            EventSpace::Finite { probs } => probs.len(),
            EventSpace::AnchorSampler { anchors: ev_anchors, probs } => {
                if !ev_anchors.is_empty() && ev_anchors != &anchors {
                    return Err(IntegrandError::Invalid(
                        "anchor-sampler anchors disagree with integrand anchors".into(),
                    ));
                }
                probs.len()
            }
            EventSpace::Generator(_) => {
                return Err(IntegrandError::Invalid(
                    "anchor lists pair with finite event spaces; use *_generated".into(),
                ));
            }
        };
        if n != anchors.len() {
            return Err(IntegrandError::Invalid(format!(
                "{} events but {} anchors",
                n,
                anchors.len()
            )));
        }
        let weights = vec![1.0; n];
        let base_point = space.base_point();
        let mut g = Integrand {
            space,
            family,
            events,
            anchors,
            weights,
            base_point,
            operating_radius: DEFAULT_OPERATING_RADIUS,
            anchor_spread: 0.0,
        };
        g.refresh_anchor_spread();
        Ok(g)
    }

    /// `f(e, x) = (w_e / 2) d²(x, a_e)` with uniform event draws.
    pub fn squared_distance(space: Space, anchors: Vec<Point>) -> Result<Integrand> {
        Self::build_anchor_family(Family::SquaredDistance, space, anchors, None)
    }

    /// `f(e, x) = w_e d(x, a_e)` with uniform event draws.
    pub fn distance(space: Space, anchors: Vec<Point>) -> Result<Integrand> {
        Self::build_anchor_family(Family::Distance, space, anchors, None)
    }

    /// Squared distance to anchors produced by a generator rule.
    pub fn squared_distance_generated(space: Space, rule: GeneratorRule) -> Result<Integrand> {
        Self::build_generated(Family::SquaredDistance, space, rule)
    }

    /// Distance to anchors produced by a generator rule.
    pub fn distance_generated(space: Space, rule: GeneratorRule) -> Result<Integrand> {
        Self::build_generated(Family::Distance, space, rule)
    }

    fn build_generated(family: Family, space: Space, rule: GeneratorRule) -> Result<Integrand> {
        space.validate(&rule.center)?;
        if !(rule.radius > 0.0) || !(rule.weight > 0.0) {
            return Err(IntegrandError::Invalid(
                "generator radius and weight must be > 0".into(),
            ));
        }
        let base_point = space.base_point();
        let mut g = Integrand {
            space,
            family,
            events: EventSpace::Generator(rule),
            anchors: Vec::new(),
            weights: Vec::new(),
            base_point,
            operating_radius: DEFAULT_OPERATING_RADIUS,
            anchor_spread: 0.0,
        };
        g.refresh_anchor_spread();
        Ok(g)
    }

    /// Uniform random-order sum `f(k, x) = f_k(x)` of deterministic
    /// (single-event) components sharing one space.
    pub fn finite_sum(components: Vec<Integrand>) -> Result<Integrand> {
        if components.is_empty() {
            return Err(IntegrandError::Invalid("finite sum needs >= 1 component".into()));
        }
        let space = components[0].space.clone();
        for c in &components {
            if c.space != space {
                return Err(IntegrandError::Invalid("components live in different spaces".into()));
            }
            if c.event_count() != Some(1) {
                return Err(IntegrandError::Invalid(
                    "finite-sum components must be deterministic (single-event)".into(),
                ));
            }
        }
        let events = EventSpace::uniform(components.len())?;
        let base_point = space.base_point();
        let operating_radius =
            components.iter().map(|c| c.operating_radius).fold(f64::INFINITY, f64::min);
        let mut g = Integrand {
            space,
            family: Family::FiniteSum { components },
            events,
            anchors: Vec::new(),
            weights: Vec::new(),
            base_point: base_point.clone(),
            operating_radius,
            anchor_spread: 0.0,
        };
        g.set_base_point(base_point)?;
        Ok(g)
    }

    /// Register a user-supplied oracle. The proximal-inequality and
    /// nonexpansiveness gates run on `gate_samples` sampled tuples (seeded by
    /// `gate_seed`) before the integrand is admitted.
    pub fn external(
        space: Space,
        events: EventSpace,
        oracle: Arc<dyn ExternalOracle>,
        operating_radius: f64,
        gate_seed: u64,
        gate_samples: u32,
    ) -> Result<Integrand> {
        if let EventSpace::AnchorSampler { anchors, .. } = &events {
            for a in anchors {
                space.validate(a)?;
            }
        }
        let n = events.probs().map(<[f64]>::len).unwrap_or(0);
        let base_point = space.base_point();
        let mut g = Integrand {
            space,
            family: Family::External(oracle),
            events,
            anchors: Vec::new(),
            weights: vec![1.0; n],
            base_point,
            operating_radius,
            anchor_spread: 0.0,
        };
        g.refresh_anchor_spread();
        let mut stream = crate::rng::stream_from_seed(gate_seed);
        let report = checks::sample_prox_checks(&g, &mut stream, gate_samples, operating_radius)?;
        if report.max_prox_inequality_residual > GEOM_TOL {
            return Err(IntegrandError::GateFailed(format!(
                "proximal inequality violated by {:.3e}",
                report.max_prox_inequality_residual
            )));
        }
        if report.max_nonexpansion_gap > GEOM_TOL {
            return Err(IntegrandError::GateFailed(format!(
                "nonexpansiveness violated by {:.3e}",
                report.max_nonexpansion_gap
            )));
        }
        Ok(g)
    }

    /// Replace the event distribution (finite kinds only).
    pub fn with_probs(mut self, weights: Vec<f64>) -> Result<Integrand> {
        let probs = normalize_probs(weights)?;
        match &mut self.events {
            EventSpace::Finite { probs: p } | EventSpace::AnchorSampler { probs: p, .. } => {
                if p.len() != probs.len() {
                    return Err(IntegrandError::Invalid(format!(
                        "expected {} probabilities, got {}",
                        p.len(),
                        probs.len()
                    )));
                }
                *p = probs;
            }
            EventSpace::Generator(_) => {
                return Err(IntegrandError::Invalid(
                    "generator event spaces have no finite distribution".into(),
                ))
            }
        }
        Ok(self)
    }

    /// Replace the per-event function weights `w_e` (finite kinds only).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Integrand> {
        if weights.len() != self.weights.len() {
            return Err(IntegrandError::Invalid(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(IntegrandError::Invalid("function weights must be > 0".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    /// Store anchors in the event space (anchor-sampler representation).
    pub fn into_anchor_sampler(mut self) -> Result<Integrand> {
        match (&self.family, &self.events) {
            (Family::SquaredDistance | Family::Distance, EventSpace::Finite { probs }) => {
                self.events = EventSpace::AnchorSampler {
                    anchors: self.anchors.clone(),
                    probs: probs.clone(),
                };
                Ok(self)
            }
            _ => Err(IntegrandError::Invalid(
                "only anchor families over finite events convert to anchor samplers".into(),
            )),
        }
    }

    pub fn with_base_point(mut self, p: Point) -> Result<Integrand> {
        self.set_base_point(p)?;
        Ok(self)
    }

    pub fn with_operating_radius(mut self, r: f64) -> Result<Integrand> {
        if !(r > 0.0) {
            return Err(IntegrandError::Domain("operating radius must be > 0".into()));
        }
        self.operating_radius = r;
        if let Family::FiniteSum { components } = &mut self.family {
            for c in components {
                c.operating_radius = r;
            }
        }
        Ok(self)
    }

    fn set_base_point(&mut self, p: Point) -> Result<()> {
        self.space.validate(&p)?;
        if let Family::FiniteSum { components } = &mut self.family {
            for c in components {
                c.set_base_point(p.clone())?;
            }
        }
        self.base_point = p;
        self.refresh_anchor_spread();
        Ok(())
    }

    fn refresh_anchor_spread(&mut self) {
        self.anchor_spread = match &self.events {
            EventSpace::Generator(rule) => {
                self.space.distance_unchecked(&rule.center, &self.base_point) + rule.radius
            }
            EventSpace::AnchorSampler { anchors, .. } => anchors
                .iter()
                .map(|a| self.space.distance_unchecked(a, &self.base_point))
                .fold(0.0, f64::max),
            EventSpace::Finite { .. } => match &self.family {
                Family::FiniteSum { components } => components
                    .iter()
                    .map(|c| c.anchor_spread)
                    .fold(0.0, f64::max),
                _ => self
                    .anchors
                    .iter()
                    .map(|a| self.space.distance_unchecked(a, &self.base_point))
                    .fold(0.0, f64::max),
            },
        };
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn family_kind(&self) -> FamilyKind {
        match &self.family {
            Family::SquaredDistance => FamilyKind::SquaredDistance,
            Family::Distance => FamilyKind::Distance,
            Family::FiniteSum { .. } => FamilyKind::FiniteSum,
            Family::External(_) => FamilyKind::External,
        }
    }

    pub fn events(&self) -> &EventSpace {
        &self.events
    }

    pub fn base_point(&self) -> &Point {
        &self.base_point
    }

    pub fn operating_radius(&self) -> f64 {
        self.operating_radius
    }

    /// Number of events of a finite event space.
    pub fn event_count(&self) -> Option<usize> {
        self.events.probs().map(<[f64]>::len)
    }

    /// The components of a finite sum, if this is one.
    pub fn components(&self) -> Option<&[Integrand]> {
        match &self.family {
            Family::FiniteSum { components } => Some(components),
            _ => None,
        }
    }

    fn index_event(&self, k: usize) -> Result<()> {
        match self.event_count() {
            Some(n) if k < n => Ok(()),
            Some(n) => Err(IntegrandError::UnknownEvent(format!("index {k} out of 0..{n}"))),
            None => Err(IntegrandError::UnknownEvent(
                "index event against a generator space".into(),
            )),
        }
    }

    /// The anchor `a_e`.
    pub fn anchor_of(&self, event: &Event) -> Result<Point> {
        match event {
            Event::Generated { anchor, .. } => Ok(anchor.clone()),
            Event::Index(k) => {
                self.index_event(*k)?;
                match (&self.family, &self.events) {
                    (Family::FiniteSum { components }, _) => {
                        components[*k].anchor_of(&Event::Index(0))
                    }
                    (_, EventSpace::AnchorSampler { anchors, .. }) => Ok(anchors[*k].clone()),
                    _ => Ok(self.anchors[*k].clone()),
                }
            }
        }
    }

    /// The function weight `w_e`.
    pub fn weight_of(&self, event: &Event) -> Result<f64> {
        match event {
            Event::Generated { weight, .. } => Ok(*weight),
            Event::Index(k) => {
                self.index_event(*k)?;
                match &self.family {
                    Family::FiniteSum { components } => components[*k].weight_of(&Event::Index(0)),
                    _ => Ok(self.weights[*k]),
                }
            }
        }
    }

    /// The growth bound `L(e)`, valid on the operating ball.
    pub fn growth_of(&self, event: &Event) -> Result<f64> {
        match &self.family {
            Family::Distance => Ok(self.weight_of(event)?),
            Family::SquaredDistance => {
                Ok(self.weight_of(event)? * (1.0 + self.anchor_spread + self.operating_radius))
            }
            Family::FiniteSum { components } => match event {
                Event::Index(k) => {
                    self.index_event(*k)?;
                    components[*k].growth_of(&Event::Index(0))
                }
                Event::Generated { .. } => {
                    Err(IntegrandError::UnknownEvent("generated event on a finite sum".into()))
                }
            },
            Family::External(oracle) => Ok(oracle.growth(event)),
        }
    }

    /// `∫ L dµ`; exact for finite event spaces and for constant-weight
    /// generator rules (whose L is constant).
    pub fn mean_growth(&self) -> f64 {
        self.growth_moment(1)
    }

    /// `∫ L² dµ`, the second growth moment entering the quasi-Fejér bound.
    pub fn mean_growth_sq(&self) -> f64 {
        self.growth_moment(2)
    }

    fn growth_moment(&self, power: i32) -> f64 {
        match self.events.probs() {
            Some(probs) => probs
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let l = self.growth_of(&Event::Index(k)).expect("finite event");
                    p * l.powi(power)
                })
                .sum(),
            None => {
                // Generator rules have a constant weight, hence constant L.
                let rule = match &self.events {
                    EventSpace::Generator(rule) => rule,
                    _ => unreachable!(),
                };
                let probe = Event::Generated { anchor: rule.center.clone(), weight: rule.weight };
                self.growth_of(&probe).expect("generated event").powi(power)
            }
        }
    }

    /// Evaluate `f(e, x)` (extended-real valued; built-ins are finite).
    pub fn eval(&self, event: &Event, x: &Point) -> Result<f64> {
        self.space.validate(x)?;
        match &self.family {
            Family::SquaredDistance => {
                let a = self.anchor_of(event)?;
                let w = self.weight_of(event)?;
                let d = self.space.distance_unchecked(x, &a);
                Ok(0.5 * w * d * d)
            }
            Family::Distance => {
                let a = self.anchor_of(event)?;
                let w = self.weight_of(event)?;
                Ok(w * self.space.distance_unchecked(x, &a))
            }
            Family::FiniteSum { components } => match event {
                Event::Index(k) => {
                    self.index_event(*k)?;
                    components[*k].eval(&Event::Index(0), x)
                }
                Event::Generated { .. } => {
                    Err(IntegrandError::UnknownEvent("generated event on a finite sum".into()))
                }
            },
            Family::External(oracle) => Ok(oracle.eval(event, x)),
        }
    }

    /// The proximal map: the exact minimizer of
    /// `y ↦ f(e, y) + d²(x, y) / (2λ)`.
    pub fn prox(&self, lambda: f64, event: &Event, x: &Point) -> Result<Point> {
        if !(lambda > 0.0) {
            return Err(IntegrandError::Domain(format!("prox step lambda = {lambda} must be > 0")));
        }
        self.space.validate(x)?;
        match &self.family {
            Family::SquaredDistance => {
                let a = self.anchor_of(event)?;
                let w = self.weight_of(event)?;
                let t = lambda * w / (1.0 + lambda * w);
                Ok(self.space.geodesic_unchecked(x, &a, t))
            }
            Family::Distance => {
                let a = self.anchor_of(event)?;
                let w = self.weight_of(event)?;
                let d = self.space.distance_unchecked(x, &a);
                if d == 0.0 {
                    return Ok(x.clone());
                }
                let t = ((lambda * w) / d).min(1.0);
                Ok(self.space.geodesic_unchecked(x, &a, t))
            }
            Family::FiniteSum { components } => match event {
                Event::Index(k) => {
                    self.index_event(*k)?;
                    components[*k].prox(lambda, &Event::Index(0), x)
                }
                Event::Generated { .. } => {
                    Err(IntegrandError::UnknownEvent("generated event on a finite sum".into()))
                }
            },
            Family::External(oracle) => Ok(oracle.prox(lambda, event, x)),
        }
    }

    /// Draw one event from µ; deterministic given the stream state.
    pub fn sample_event(&self, stream: &mut Stream) -> Event {
        self.events.sample(&self.space, stream)
    }

    /// Estimate `F(x) = ∫ f(e, x) dµ(e)`.
    ///
    /// Finite event spaces give the exact probability-weighted sum with
    /// standard error 0; anchor samplers and generators use a Monte Carlo
    /// mean over `samples` fresh events with its standard error.
    pub fn big_f(&self, x: &Point, samples: u32, stream: &mut Stream) -> Result<(f64, f64)> {
        if samples == 0 {
            return Err(IntegrandError::Domain("big_f needs samples >= 1".into()));
        }
        match &self.events {
            EventSpace::Finite { probs } => {
                let probs = probs.clone();
                let mut total = 0.0;
                for (k, p) in probs.iter().enumerate() {
                    if *p > 0.0 {
                        total += p * self.eval(&Event::Index(k), x)?;
                    }
                }
                Ok((total, 0.0))
            }
            _ => {
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                for _ in 0..samples {
                    let e = self.sample_event(stream);
                    let v = self.eval(&e, x)?;
                    sum += v;
                    sum_sq += v * v;
                }
                let n = samples as f64;
                let mean = sum / n;
                let var = ((sum_sq / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
                Ok((mean, (var / n).sqrt()))
            }
        }
    }

    /// Sample the growth condition on the ball of `radius` around the base
    /// point: returns the max over `pairs` tuples `(e, x, y)` of
    /// `f(e,x) − f(e,y) − L(e)(1 + d(x,p)) d(x,y)`.
    pub fn growth_check(&self, stream: &mut Stream, pairs: u32, radius: f64) -> Result<f64> {
        if matches!(self.family, Family::SquaredDistance | Family::FiniteSum { .. })
            && radius > self.operating_radius
        {
            return Err(IntegrandError::Domain(format!(
                "growth certified only up to the operating radius {} (asked {radius})",
                self.operating_radius
            )));
        }
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..pairs {
            let e = self.sample_event(stream);
            let x = self.space.random_point_near(stream, &self.base_point, radius)?;
            let y = self.space.random_point_near(stream, &self.base_point, radius)?;
            let l = self.growth_of(&e)?;
            let gap = self.eval(&e, &x)? - self.eval(&e, &y)?
                - l * (1.0 + self.space.distance_unchecked(&x, &self.base_point))
                    * self.space.distance_unchecked(&x, &y);
            worst = worst.max(gap);
        }
        Ok(worst)
    }

    /// Residual of the proximal inequality at `(λ, e, x, y)`:
    ///
    /// `f(e, prox) − f(e, y) − [d²(x,y) − d²(prox,y)] / (2λ)`.
    ///
    /// Nonpositive (within [`GEOM_TOL`]) for every correct prox rule; this is
    /// the primary correctness oracle for proximal maps.
    pub fn prox_inequality_residual(
        &self,
        lambda: f64,
        event: &Event,
        x: &Point,
        y: &Point,
    ) -> Result<f64> {
        let p = self.prox(lambda, event, x)?;
        self.space.validate(y)?;
        let dxy = self.space.distance_unchecked(x, y);
        let dpy = self.space.distance_unchecked(&p, y);
        let lhs = self.eval(event, &p)? - self.eval(event, y)?;
        Ok(lhs - (dxy * dxy - dpy * dpy) / (2.0 * lambda))
    }
}

/// Sampled correctness checks shared by the registration gate, the test
/// suites, and the diagnostics report.
pub mod checks {
    use super::*;

    #[derive(Debug, Clone, Copy, Default, Serialize)]
    pub struct ProxCheckReport {
        pub samples: u32,
        pub max_prox_inequality_residual: f64,
        pub max_nonexpansion_gap: f64,
    }

    /// Sample `(λ, e, x, y)` tuples near the base point and record the worst
    /// proximal-inequality residual and nonexpansiveness gap.
    pub fn sample_prox_checks(
        g: &Integrand,
        stream: &mut Stream,
        samples: u32,
        radius: f64,
    ) -> Result<ProxCheckReport> {
        let space = g.space().clone();
        let p = g.base_point().clone();
        let mut report = ProxCheckReport { samples, ..Default::default() };
        for _ in 0..samples {
            let lambda = 10f64.powf(stream.gen_range(-3.0..1.0));
            let e = g.sample_event(stream);
            let x = space.random_point_near(stream, &p, radius)?;
            let y = space.random_point_near(stream, &p, radius)?;
            let res = g.prox_inequality_residual(lambda, &e, &x, &y)?;
            report.max_prox_inequality_residual = report.max_prox_inequality_residual.max(res);
            let px = g.prox(lambda, &e, &x)?;
            let py = g.prox(lambda, &e, &y)?;
            let gap = space.distance_unchecked(&px, &py) - space.distance_unchecked(&x, &y);
            report.max_nonexpansion_gap = report.max_nonexpansion_gap.max(gap);
        }
        Ok(report)
    }

    /// Worst decrease of the prox objective under perturbations of the
    /// returned point along geodesics toward `directions` random targets.
    pub fn max_optimality_gap(
        g: &Integrand,
        stream: &mut Stream,
        samples: u32,
        directions: u32,
        radius: f64,
    ) -> Result<f64> {
        let space = g.space().clone();
        let p = g.base_point().clone();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let lambda = 10f64.powf(stream.gen_range(-2.0..1.0));
            let e = g.sample_event(stream);
            let x = space.random_point_near(stream, &p, radius)?;
            let prox = g.prox(lambda, &e, &x)?;
            let objective = |y: &Point| -> Result<f64> {
                let d = space.distance_unchecked(&x, y);
                Ok(g.eval(&e, y)? + d * d / (2.0 * lambda))
            };
            let at_prox = objective(&prox)?;
            for _ in 0..directions {
                let target = space.random_point_near(stream, &p, radius)?;
                let d = space.distance_unchecked(&prox, &target);
                if d == 0.0 {
                    continue;
                }
                let delta: f64 = stream.gen_range(1e-4..1e-2);
                let y = space.geodesic_unchecked(&prox, &target, (delta / d).min(1.0));
                worst = worst.max(at_prox - objective(&y)?);
            }
        }
        Ok(worst)
    }

    /// Worst violation of convexity of `f(e, ·)` along sampled geodesics:
    /// `f(e, γ(t)) − (1−t) f(e,x) − t f(e,y)`.
    pub fn max_convexity_gap(
        g: &Integrand,
        stream: &mut Stream,
        samples: u32,
        radius: f64,
    ) -> Result<f64> {
        let space = g.space().clone();
        let p = g.base_point().clone();
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let e = g.sample_event(stream);
            let x = space.random_point_near(stream, &p, radius)?;
            let y = space.random_point_near(stream, &p, radius)?;
            let t: f64 = stream.gen_range(0.0..=1.0);
            let mid = space.geodesic_unchecked(&x, &y, t);
            let gap = g.eval(&e, &mid)? - (1.0 - t) * g.eval(&e, &x)? - t * g.eval(&e, &y)?;
            worst = worst.max(gap);
        }
        Ok(worst)
    }
}

/// Serializable descriptor of a built-in integrand, used by run manifests
/// and config files. External oracles are programmatic and have no spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSpec {
    pub space: Space,
    pub family: FamilySpec,
    pub events: EventSpace,
    #[serde(default)]
    pub anchors: Vec<Point>,
    #[serde(default)]
    pub weights: Vec<f64>,
    pub base_point: Point,
    pub operating_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    SquaredDistance,
    Distance,
    FiniteSum { components: Vec<IntegrandSpec> },
}

impl Integrand {
    /// Descriptor for manifests; errors for external oracles, which cannot
    /// be reconstructed from data.
    pub fn to_spec(&self) -> Result<IntegrandSpec> {
        let family = match &self.family {
            Family::SquaredDistance => FamilySpec::SquaredDistance,
            Family::Distance => FamilySpec::Distance,
            Family::FiniteSum { components } => FamilySpec::FiniteSum {
                components: components
                    .iter()
                    .map(Integrand::to_spec)
                    .collect::<Result<Vec<_>>>()?,
            },
            Family::External(_) => {
                return Err(IntegrandError::Invalid(
                    "external integrands are not serializable".into(),
                ))
            }
        };
        Ok(IntegrandSpec {
            space: self.space.clone(),
            family,
            events: self.events.clone(),
            anchors: self.anchors.clone(),
            weights: self.weights.clone(),
            base_point: self.base_point.clone(),
            operating_radius: self.operating_radius,
        })
    }

    pub fn from_spec(spec: &IntegrandSpec) -> Result<Integrand> {
        let g = match &spec.family {
            FamilySpec::SquaredDistance | FamilySpec::Distance => {
                let family = if matches!(spec.family, FamilySpec::SquaredDistance) {
                    Family::SquaredDistance
                } else {
                    Family::Distance
                };
                match &spec.events {
                    EventSpace::Generator(rule) => {
                        Self::build_generated(family, spec.space.clone(), rule.clone())?
                    }
                    _ => {
                        let anchors = if spec.anchors.is_empty() {
                            match &spec.events {
                                EventSpace::AnchorSampler { anchors, .. } => anchors.clone(),
                                _ => Vec::new(),
                            }
                        } else {
                            spec.anchors.clone()
                        };
                        let mut g = Self::build_anchor_family(
                            family,
                            spec.space.clone(),
                            anchors,
                            Some(spec.events.clone()),
                        )?;
                        if !spec.weights.is_empty() {
                            g = g.with_weights(spec.weights.clone())?;
                        }
                        g
                    }
                }
            }
            FamilySpec::FiniteSum { components } => {
                let comps = components
                    .iter()
                    .map(Integrand::from_spec)
                    .collect::<Result<Vec<_>>>()?;
                let mut g = Integrand::finite_sum(comps)?;
                if let Some(probs) = spec.events.probs() {
                    g = g.with_probs(probs.to_vec())?;
                }
                g
            }
        };
        let mut g = g.with_base_point(spec.base_point.clone())?;
        if spec.operating_radius.is_finite() {
            g = g.with_operating_radius(spec.operating_radius)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;
    use approx::assert_abs_diff_eq;

    fn euclid2() -> Space {
        Space::euclidean(2).unwrap()
    }

    fn spider3() -> Space {
        Space::spider(3).unwrap()
    }

    #[test]
    fn eval_squared_distance_minimum() {
        let a = Point::euclidean([1.0, -2.0]);
        let g = Integrand::squared_distance(euclid2(), vec![a.clone()]).unwrap();
        assert_eq!(g.eval(&Event::Index(0), &a).unwrap(), 0.0);
    }

    #[test]
    fn eval_distance_weighted() {
        let g = Integrand::distance(euclid2(), vec![Point::euclidean([0.0, 0.0])])
            .unwrap()
            .with_weights(vec![2.0])
            .unwrap();
        let x = Point::euclidean([3.0, 0.0]);
        assert_eq!(g.eval(&Event::Index(0), &x).unwrap(), 6.0);
    }

    #[test]
    fn eval_squared_distance_spider() {
        // half of 2 squared across the origin
        let g = Integrand::squared_distance(spider3(), vec![Point::spider(2, 1.0)]).unwrap();
        let x = Point::spider(1, 1.0);
        assert_eq!(g.eval(&Event::Index(0), &x).unwrap(), 2.0);
    }

    #[test]
    fn prox_fixed_point_at_anchor() {
        let a = Point::euclidean([0.5, 0.5]);
        for g in [
            Integrand::squared_distance(euclid2(), vec![a.clone()]).unwrap(),
            Integrand::distance(euclid2(), vec![a.clone()]).unwrap(),
        ] {
            let p = g.prox(0.7, &Event::Index(0), &a).unwrap();
            assert_eq!(p, a);
        }
    }

    /// Brute-force oracle: coarse grid then coordinate descent with
    /// shrinking steps, independent of the geodesic prox formulas.
    fn brute_force_min_euclid2(f: impl Fn(&[f64; 2]) -> f64) -> [f64; 2] {
        let mut best = [0.0, 0.0];
        let mut best_val = f64::INFINITY;
        let n = 60;
        for i in 0..=n {
            for j in 0..=n {
                let y = [-3.0 + 6.0 * i as f64 / n as f64, -3.0 + 6.0 * j as f64 / n as f64];
                let v = f(&y);
                if v < best_val {
                    best_val = v;
                    best = y;
                }
            }
        }
        let mut step = 6.0 / n as f64;
        while step > 1e-12 {
            let mut improved = false;
            for axis in 0..2 {
                for dir in [-1.0, 1.0] {
                    let mut cand = best;
                    cand[axis] += dir * step;
                    let v = f(&cand);
                    if v < best_val {
                        best_val = v;
                        best = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    }

    #[test]
    fn prox_squared_distance_matches_brute_force() {
        let g = Integrand::squared_distance(euclid2(), vec![Point::euclidean([0.0, 0.0])])
            .unwrap();
        let x = [2.0, 0.0];
        // prox objective: 0.5*|y|^2 + 0.5*|y - x|^2
        let oracle = brute_force_min_euclid2(|y| {
            let fy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
            let dx = [y[0] - x[0], y[1] - x[1]];
            fy + 0.5 * (dx[0] * dx[0] + dx[1] * dx[1])
        });
        assert_abs_diff_eq!(oracle[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(oracle[1], 0.0, epsilon = 1e-6);
        let p = g.prox(1.0, &Event::Index(0), &Point::euclidean([2.0, 0.0])).unwrap();
        assert_eq!(p, Point::euclidean([1.0, 0.0]));
    }

    #[test]
    fn prox_distance_matches_brute_force() {
        let g = Integrand::distance(euclid2(), vec![Point::euclidean([0.0, 0.0])]).unwrap();
        let x = [3.0, 0.0];
        // prox objective: |y| + 0.5*|y - x|^2
        let oracle = brute_force_min_euclid2(|y| {
            let fy = (y[0] * y[0] + y[1] * y[1]).sqrt();
            let dx = [y[0] - x[0], y[1] - x[1]];
            fy + 0.5 * (dx[0] * dx[0] + dx[1] * dx[1])
        });
        assert_abs_diff_eq!(oracle[0], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(oracle[1], 0.0, epsilon = 1e-6);
        let p = g.prox(1.0, &Event::Index(0), &Point::euclidean([3.0, 0.0])).unwrap();
        assert_eq!(p, Point::euclidean([2.0, 0.0]));
    }

    /// Brute-force prox oracle on the spider: dense radius grid over every
    /// leg plus the origin, refined once around the best cell.
    fn brute_force_prox_spider(
        space: &Space,
        objective: impl Fn(&Point) -> f64,
        legs: usize,
        r_max: f64,
    ) -> Point {
        let mut best = Point::spider(0, 0.0);
        let mut best_val = objective(&best);
        let mut scan = |lo: f64, hi: f64, step: f64, best: &mut Point, best_val: &mut f64| {
            for leg in 1..=legs {
                let mut r = lo.max(0.0);
                while r <= hi {
                    let p = Point::spider(leg, r);
                    let v = objective(&p);
                    if v < *best_val {
                        *best_val = v;
                        *best = p;
                    }
                    r += step;
                }
            }
        };
        scan(0.0, r_max, r_max / 2000.0, &mut best, &mut best_val);
        if let Point::Spider { radius, .. } = best {
            let step = r_max / 2000.0;
            scan(radius - step, radius + step, step / 1000.0, &mut best, &mut best_val);
        }
        let _ = space;
        best
    }

    #[test]
    fn prox_matches_brute_force_on_spider() {
        let space = spider3();
        let a = Point::spider(2, 1.5);
        let sq = Integrand::squared_distance(space.clone(), vec![a.clone()]).unwrap();
        let dist = Integrand::distance(space.clone(), vec![a.clone()]).unwrap();
        let mut stream = stream_from_seed(14);
        for _ in 0..25 {
            let x = space.random_point(&mut stream, 2.0);
            let lambda = 10f64.powf(stream.gen_range(-1.5..0.5));
            for g in [&sq, &dist] {
                let prox = g.prox(lambda, &Event::Index(0), &x).unwrap();
                let objective = |y: &Point| {
                    let d = space.distance_unchecked(&x, y);
                    g.eval(&Event::Index(0), y).unwrap() + d * d / (2.0 * lambda)
                };
                let oracle = brute_force_prox_spider(&space, objective, 3, 4.0);
                assert!(
                    space.distance_unchecked(&prox, &oracle) <= 1e-2,
                    "prox {prox:?} vs oracle {oracle:?}"
                );
                assert!(
                    objective(&prox) <= objective(&oracle) + 1e-9,
                    "prox objective must not exceed the grid optimum"
                );
            }
        }
    }

    #[test]
    fn prox_rejects_nonpositive_lambda() {
        let g = Integrand::distance(euclid2(), vec![Point::euclidean([0.0, 0.0])]).unwrap();
        let x = Point::euclidean([1.0, 0.0]);
        assert!(matches!(
            g.prox(0.0, &Event::Index(0), &x),
            Err(IntegrandError::Domain(_))
        ));
    }

    #[test]
    fn single_event_space_always_draws_it() {
        let g = Integrand::squared_distance(euclid2(), vec![Point::euclidean([1.0, 1.0])])
            .unwrap();
        let mut stream = stream_from_seed(0);
        for _ in 0..100 {
            assert_eq!(g.sample_event(&mut stream), Event::Index(0));
        }
    }

    #[test]
    fn sample_event_frequencies_within_binomial_se() {
        let anchors = vec![
            Point::euclidean([0.0, 0.0]),
            Point::euclidean([1.0, 0.0]),
            Point::euclidean([0.0, 1.0]),
        ];
        let g = Integrand::squared_distance(euclid2(), anchors).unwrap();
        let mut stream = stream_from_seed(11);
        let n = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            if let Event::Index(k) = g.sample_event(&mut stream) {
                counts[k] += 1;
            }
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 3.0 * se,
                "frequency {freq} off uniform by more than 3 SE ({se:.5})"
            );
        }
    }

    #[test]
    fn sample_event_deterministic() {
        let g = Integrand::distance(
            euclid2(),
            vec![Point::euclidean([0.0, 0.0]), Point::euclidean([1.0, 0.0])],
        )
        .unwrap();
        let draw = |seed| {
            let mut s = stream_from_seed(seed);
            (0..50).map(|_| g.sample_event(&mut s)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn big_f_identical_summands() {
        let a = Point::euclidean([1.0, 0.0]);
        let comp = || Integrand::distance(euclid2(), vec![a.clone()]).unwrap();
        let g = Integrand::finite_sum(vec![comp(), comp()]).unwrap();
        let x = Point::euclidean([4.0, 0.0]);
        let mut stream = stream_from_seed(0);
        let (est, se) = g.big_f(&x, 1, &mut stream).unwrap();
        assert_eq!(se, 0.0);
        assert_abs_diff_eq!(est, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn big_f_single_anchor_exact() {
        let a = Point::euclidean([0.0, 0.0]);
        let g = Integrand::squared_distance(euclid2(), vec![a]).unwrap();
        let x = Point::euclidean([3.0, 0.0]);
        let mut stream = stream_from_seed(0);
        let (est, se) = g.big_f(&x, 1, &mut stream).unwrap();
        assert_eq!((est, se), (4.5, 0.0));
    }

    #[test]
    fn big_f_anchor_sampler_within_3se() {
        // Two equally likely anchors (0,0) and (2,0); at x = (0,0) the exact
        // expectation of 1/2 d^2 is 0.5*0 + 0.5*2 = 1.
        let anchors = vec![Point::euclidean([0.0, 0.0]), Point::euclidean([2.0, 0.0])];
        let g = Integrand::squared_distance(euclid2(), anchors)
            .unwrap()
            .into_anchor_sampler()
            .unwrap();
        let mut stream = stream_from_seed(21);
        let x = Point::euclidean([0.0, 0.0]);
        let (est, se) = g.big_f(&x, 10_000, &mut stream).unwrap();
        assert!(se > 0.0);
        assert!(
            (est - 1.0).abs() <= 3.0 * se,
            "estimate {est} not within 3 SE ({se:.5}) of 1"
        );
    }

    #[test]
    fn big_f_generator_self_consistent() {
        // The generator law is implementation-defined, so the reference is an
        // independent long-run average of eval over sampled events.
        let space = Space::euclidean(1).unwrap();
        let rule = GeneratorRule {
            center: Point::euclidean([0.0]),
            radius: 2.0,
            weight: 1.0,
        };
        let g = Integrand::squared_distance_generated(space, rule).unwrap();
        let x = Point::euclidean([0.0]);
        let mut ref_stream = stream_from_seed(1000);
        let n_ref = 300_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_ref {
            let e = g.sample_event(&mut ref_stream);
            let v = g.eval(&e, &x).unwrap();
            sum += v;
            sum_sq += v * v;
        }
        let reference = sum / n_ref as f64;
        let ref_se = (((sum_sq / n_ref as f64) - reference * reference) / n_ref as f64).sqrt();

        let mut stream = stream_from_seed(21);
        let (est, se) = g.big_f(&x, 10_000, &mut stream).unwrap();
        assert!(se > 0.0);
        assert!(
            (est - reference).abs() <= 3.0 * (se + ref_se),
            "estimate {est} not within 3 SE of reference {reference}"
        );
    }

    #[test]
    fn big_f_zero_samples_rejected() {
        let g = Integrand::distance(euclid2(), vec![Point::euclidean([0.0, 0.0])]).unwrap();
        let mut stream = stream_from_seed(0);
        let x = Point::euclidean([0.0, 0.0]);
        assert!(matches!(
            g.big_f(&x, 0, &mut stream),
            Err(IntegrandError::Domain(_))
        ));
    }

    #[test]
    fn growth_check_distance_family_nonpositive() {
        let g = Integrand::distance(
            spider3(),
            vec![Point::spider(1, 1.0), Point::spider(2, 0.5)],
        )
        .unwrap();
        let mut stream = stream_from_seed(5);
        let worst = g.growth_check(&mut stream, 2000, 50.0).unwrap();
        assert!(worst <= 0.0, "distance family is globally Lipschitz, got {worst}");
    }

    #[test]
    fn growth_check_squared_distance_in_region() {
        let g = Integrand::squared_distance(
            euclid2(),
            vec![Point::euclidean([1.0, 0.0]), Point::euclidean([0.0, -1.0])],
        )
        .unwrap()
        .with_operating_radius(5.0)
        .unwrap();
        let mut stream = stream_from_seed(6);
        let worst = g.growth_check(&mut stream, 2000, 5.0).unwrap();
        assert!(worst <= GEOM_TOL, "violation {worst} beyond tolerance");
    }

    #[test]
    fn growth_check_rejects_radius_beyond_region() {
        let g = Integrand::squared_distance(euclid2(), vec![Point::euclidean([0.0, 0.0])])
            .unwrap()
            .with_operating_radius(2.0)
            .unwrap();
        let mut stream = stream_from_seed(7);
        assert!(matches!(
            g.growth_check(&mut stream, 10, 3.0),
            Err(IntegrandError::Domain(_))
        ));
    }

    #[test]
    fn prox_inequality_at_y_equals_prox() {
        let g = Integrand::squared_distance(euclid2(), vec![Point::euclidean([0.0, 0.0])])
            .unwrap();
        let x = Point::euclidean([2.0, 1.0]);
        let e = Event::Index(0);
        let p = g.prox(0.5, &e, &x).unwrap();
        let res = g.prox_inequality_residual(0.5, &e, &x, &p).unwrap();
        assert!(res <= 0.0);
    }

    #[test]
    fn prox_inequality_at_fixed_point() {
        // x = anchor is the prox fixed point; the full expression stays <= 0
        // over random y even though f(e,x) - f(e,y) alone does not.
        let a = Point::euclidean([1.0, 1.0]);
        let g = Integrand::squared_distance(euclid2(), vec![a.clone()]).unwrap();
        let mut stream = stream_from_seed(8);
        for _ in 0..100 {
            let y = euclid2().random_point(&mut stream, 3.0);
            let res = g.prox_inequality_residual(1.0, &Event::Index(0), &a, &y).unwrap();
            assert!(res <= GEOM_TOL, "residual {res} at fixed point");
        }
    }

    #[test]
    fn sampled_prox_checks_within_tolerance() {
        let spaces: Vec<Space> = vec![euclid2(), spider3(), Space::hyperboloid(2).unwrap()];
        for space in spaces {
            let mut stream = stream_from_seed(9);
            let anchors: Vec<Point> =
                (0..4).map(|_| space.random_point(&mut stream, 2.0)).collect();
            for g in [
                Integrand::squared_distance(space.clone(), anchors.clone()).unwrap(),
                Integrand::distance(space.clone(), anchors.clone()).unwrap(),
            ] {
                let report = checks::sample_prox_checks(&g, &mut stream, 1000, 3.0).unwrap();
                assert!(
                    report.max_prox_inequality_residual <= GEOM_TOL,
                    "{space}: residual {}",
                    report.max_prox_inequality_residual
                );
                assert!(
                    report.max_nonexpansion_gap <= GEOM_TOL,
                    "{space}: nonexpansion gap {}",
                    report.max_nonexpansion_gap
                );
            }
        }
    }

    #[test]
    fn optimality_under_perturbation() {
        let g = Integrand::distance(
            spider3(),
            vec![Point::spider(1, 1.0), Point::spider(3, 2.0)],
        )
        .unwrap();
        let mut stream = stream_from_seed(10);
        let gap = checks::max_optimality_gap(&g, &mut stream, 200, 20, 3.0).unwrap();
        assert!(gap <= 1e-8, "prox objective decreased by {gap} under perturbation");
    }

    #[test]
    fn eval_convex_along_geodesics() {
        let space = Space::hyperboloid(2).unwrap();
        let mut stream = stream_from_seed(12);
        let anchors: Vec<Point> = (0..3).map(|_| space.random_point(&mut stream, 2.0)).collect();
        for g in [
            Integrand::squared_distance(space.clone(), anchors.clone()).unwrap(),
            Integrand::distance(space.clone(), anchors).unwrap(),
        ] {
            let gap = checks::max_convexity_gap(&g, &mut stream, 2000, 3.0).unwrap();
            assert!(gap <= GEOM_TOL, "convexity gap {gap}");
        }
    }

    #[test]
    fn growth_moments_satisfy_cauchy_schwarz() {
        let g = Integrand::squared_distance(
            euclid2(),
            vec![Point::euclidean([2.0, 0.0]), Point::euclidean([0.0, 1.0])],
        )
        .unwrap()
        .with_probs(vec![0.3, 0.7])
        .unwrap()
        .with_weights(vec![1.0, 2.5])
        .unwrap();
        assert!(g.mean_growth() <= g.mean_growth_sq().sqrt() + 1e-15);
    }

    #[test]
    fn external_oracle_gate_accepts_correct_rule() {
        struct Shift;
        impl ExternalOracle for Shift {
            fn eval(&self, _event: &Event, x: &Point) -> f64 {
                // f(x) = d(x, a) with a = (1, 0)
                if let Point::Euclidean(v) = x {
                    ((v[0] - 1.0).powi(2) + v[1].powi(2)).sqrt()
                } else {
                    f64::INFINITY
                }
            }
            fn prox(&self, lambda: f64, _event: &Event, x: &Point) -> Point {
                if let Point::Euclidean(v) = x {
                    let d = ((v[0] - 1.0).powi(2) + v[1].powi(2)).sqrt();
                    if d == 0.0 {
                        return x.clone();
                    }
                    let t = (lambda / d).min(1.0);
                    Point::euclidean([v[0] + t * (1.0 - v[0]), v[1] * (1.0 - t)])
                } else {
                    x.clone()
                }
            }
            fn growth(&self, _event: &Event) -> f64 {
                1.0
            }
        }
        let g = Integrand::external(
            euclid2(),
            EventSpace::uniform(1).unwrap(),
            Arc::new(Shift),
            5.0,
            99,
            500,
        );
        assert!(g.is_ok());
    }

    #[test]
    fn external_oracle_gate_rejects_overshooting_rule() {
        struct Overshoot;
        impl ExternalOracle for Overshoot {
            fn eval(&self, _event: &Event, x: &Point) -> f64 {
                if let Point::Euclidean(v) = x {
                    0.5 * (v[0] * v[0] + v[1] * v[1])
                } else {
                    f64::INFINITY
                }
            }
            fn prox(&self, lambda: f64, _event: &Event, x: &Point) -> Point {
                // Steps twice as far as the true minimizer: violates the
                // proximal inequality.
                if let Point::Euclidean(v) = x {
                    let t = (2.0 * lambda / (1.0 + lambda)).min(1.0);
                    Point::euclidean([v[0] * (1.0 - t), v[1] * (1.0 - t)])
                } else {
                    x.clone()
                }
            }
            fn growth(&self, _event: &Event) -> f64 {
                10.0
            }
        }
        let g = Integrand::external(
            euclid2(),
            EventSpace::uniform(1).unwrap(),
            Arc::new(Overshoot),
            5.0,
            99,
            500,
        );
        assert!(matches!(g, Err(IntegrandError::GateFailed(_))));
    }

    #[test]
    fn finite_sum_requires_deterministic_components() {
        let two_anchor = Integrand::distance(
            euclid2(),
            vec![Point::euclidean([0.0, 0.0]), Point::euclidean([1.0, 0.0])],
        )
        .unwrap();
        assert!(Integrand::finite_sum(vec![two_anchor]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn random_integrand(seed: u64, family: u8) -> Integrand {
            let spaces = [
                Space::euclidean(2).unwrap(),
                Space::spider(3).unwrap(),
                Space::hyperboloid(2).unwrap(),
            ];
            let space = spaces[(seed % 3) as usize].clone();
            let mut stream = stream_from_seed(seed);
            let anchors: Vec<Point> =
                (0..3).map(|_| space.random_point(&mut stream, 2.0)).collect();
            if family == 0 {
                Integrand::squared_distance(space, anchors).unwrap()
            } else {
                Integrand::distance(space, anchors).unwrap()
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn prox_is_nonexpansive(seed in 0u64..1_000_000, family in 0u8..2, log_lambda in -3.0f64..1.0) {
                let g = random_integrand(seed, family);
                let space = g.space().clone();
                let mut stream = stream_from_seed(seed ^ 0xABCD);
                let lambda = 10f64.powf(log_lambda);
                let e = g.sample_event(&mut stream);
                let x = space.random_point(&mut stream, 3.0);
                let y = space.random_point(&mut stream, 3.0);
                let px = g.prox(lambda, &e, &x).unwrap();
                let py = g.prox(lambda, &e, &y).unwrap();
                prop_assert!(
                    space.distance_unchecked(&px, &py)
                        <= space.distance_unchecked(&x, &y) + GEOM_TOL
                );
            }

            #[test]
            fn prox_inequality_holds(seed in 0u64..1_000_000, family in 0u8..2, log_lambda in -3.0f64..1.0) {
                let g = random_integrand(seed, family);
                let space = g.space().clone();
                let mut stream = stream_from_seed(seed ^ 0x1234);
                let lambda = 10f64.powf(log_lambda);
                let e = g.sample_event(&mut stream);
                let x = space.random_point(&mut stream, 3.0);
                let y = space.random_point(&mut stream, 3.0);
                let res = g.prox_inequality_residual(lambda, &e, &x, &y).unwrap();
                prop_assert!(res <= GEOM_TOL, "residual {res}");
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let g = Integrand::squared_distance(
            spider3(),
            vec![Point::spider(1, 1.0), Point::spider(2, 1.0), Point::spider(3, 1.0)],
        )
        .unwrap()
        .with_weights(vec![1.0, 2.0, 3.0])
        .unwrap()
        .with_operating_radius(4.0)
        .unwrap();
        let spec = g.to_spec().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: IntegrandSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let g2 = Integrand::from_spec(&back).unwrap();
        let x = Point::spider(1, 0.25);
        for k in 0..3 {
            assert_eq!(
                g.eval(&Event::Index(k), &x).unwrap(),
                g2.eval(&Event::Index(k), &x).unwrap()
            );
        }
        assert_eq!(g.mean_growth_sq(), g2.mean_growth_sq());
    }
}
