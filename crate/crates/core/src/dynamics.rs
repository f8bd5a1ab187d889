//! Event-driven billiard flow.
//!
//! Collision times are found in closed form: for a round body the particle
//! hits an image when the transversal distance `|P(q + t v) - o|` reaches the
//! radius, a quadratic in `t`; for a wall it is a linear crossing. The time
//! axis is scanned in windows of half a period so that only the handful of
//! periodic images within reach of each window have to be tested.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{reflect_operator, Ambient, Body, Domain};
use crate::linalg::Vector;
use crate::scalar::Scalar;

pub const DEFAULT_MAX_EVENTS: usize = 100_000;

/// Position and unit velocity of the billiard particle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint<S> {
    pub q: Vector<S>,
    pub v: Vector<S>,
}

impl<S: Scalar> PhasePoint<S> {
    pub fn new(q: Vector<S>, v: Vector<S>) -> Self {
        PhasePoint { q, v }
    }

    /// Checks dimensions, unit speed (to `1e-12`) and that `q` is in the
    /// closed billiard region.
    pub fn validate(&self, domain: &Domain<S>) -> Result<()> {
        let d = domain.dim();
        if self.q.dim() != d || self.v.dim() != d {
            return Err(Error::InvalidState(format!("phase point must have dimension {d}")));
        }
        if !self.q.is_finite() || !self.v.is_finite() {
            return Err(Error::InvalidState("non-finite coordinates".into()));
        }
        if (self.v.norm() - S::one()).abs() > S::lit(1e-12) {
            return Err(Error::InvalidState(format!("velocity must have unit norm, got {}", self.v.norm())));
        }
        if !domain.is_free(&self.q) {
            return Err(Error::InvalidState("position lies inside a scatterer or outside the table".into()));
        }
        Ok(())
    }

    pub fn reversed(&self) -> Self {
        PhasePoint { q: self.q.clone(), v: -&self.v }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEvent<S> {
    /// Absolute flow time (relative to the query point in [`next_collision`]).
    pub t: S,
    /// Impact point, wrapped into the fundamental domain.
    pub q: Vector<S>,
    pub scatterer: usize,
    pub normal: Vector<S>,
    pub cos_phi: S,
    pub v_in: Vector<S>,
    pub v_out: Vector<S>,
}

impl<S> CollisionEvent<S> {
    /// Converts every number with `f` (e.g. into exact rationals).
    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> CollisionEvent<T> {
        CollisionEvent {
            t: f(&self.t),
            q: self.q.map(&f),
            scatterer: self.scatterer,
            normal: self.normal.map(&f),
            cos_phi: f(&self.cos_phi),
            v_in: self.v_in.map(&f),
            v_out: self.v_out.map(&f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedHorizon,
    /// Grazing or multiple collision.
    Grazing,
    EventCap,
    EscapeError,
}

impl Termination {
    pub fn is_singular(self) -> bool {
        matches!(self, Termination::Grazing | Termination::EscapeError)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub start: PhasePoint<S>,
    pub horizon: S,
    pub events: Vec<CollisionEvent<S>>,
    pub termination: Termination,
    /// Time at which the trajectory stops: the horizon, or the last regular
    /// event time for singular terminations.
    pub end_time: S,
    pub end: PhasePoint<S>,
    /// Largest `| |v_out| - 1 |` removed by renormalisation.
    pub max_speed_drift: S,
    /// Reason for a singular termination.
    pub detail: Option<String>,
}

impl<S: Scalar> Trajectory<S> {
    /// Smallest `cos(phi)` over all events (1 when there are none).
    pub fn min_cos_phi(&self) -> S {
        self.events.iter().fold(S::one(), |m, e| m.min(e.cos_phi))
    }

    /// Velocity on the free segment that starts at event `k - 1` (segment 0
    /// starts at the initial point).
    pub fn segment_velocity(&self, k: usize) -> &Vector<S> {
        if k == 0 {
            &self.start.v
        } else {
            &self.events[k - 1].v_out
        }
    }
}

/// Specular reflection `v_in - 2 <v_in, nu> nu` for an incoming velocity.
pub fn reflect<S: Scalar>(v_in: &Vector<S>, normal: &Vector<S>, eps_graze: S) -> Result<Vector<S>> {
    let vn = v_in.dot(normal);
    if vn > -eps_graze {
        return Err(Error::Grazing { t: f64::NAN, cos_phi: (-vn).to_f64().unwrap_or(f64::NAN) });
    }
    Ok(reflect_operator(normal, v_in))
}

#[derive(Debug, Clone)]
struct Hit<S> {
    t: S,
    scatterer: usize,
    normal: Vector<S>,
    cos_phi: S,
}

enum Probe<S> {
    Miss,
    Hit(Hit<S>),
    Graze(S, S),
}

fn probe_round<S: Scalar>(
    p0: &Vector<S>,
    u: &Vector<S>,
    image: &Vector<S>,
    radius: S,
    window: (S, S),
    eps_graze: S,
    eps_time: S,
    inside_tol: S,
) -> Result<Probe<S>> {
    let s = p0 - image;
    let a = u.norm_squared();
    let b = s.dot(u);
    let c = s.norm_squared() - radius * radius;
    if c < -inside_tol {
        return Err(Error::InvalidState("position lies inside a scatterer".into()));
    }
    if b >= S::zero() || a <= S::epsilon() * S::epsilon() {
        return Ok(Probe::Miss);
    }
    let disc = b * b - a * c;
    let graze_disc = eps_graze * eps_graze * radius * radius;
    if disc < graze_disc {
        let t_close = -b / a;
        if disc > -graze_disc && t_close > eps_time && t_close <= window.1 {
            let cos = disc.max(S::zero()).sqrt() / radius;
            return Ok(Probe::Graze(t_close, cos));
        }
        return Ok(Probe::Miss);
    }
    let root = disc.sqrt();
    // stable form of (-b - root) / a
    let mut t = c / (root - b);
    for _ in 0..2 {
        let f = (a * t + S::two() * b) * t + c;
        let df = S::two() * (a * t + b);
        if df == S::zero() {
            break;
        }
        let step = f / df;
        t = t - step;
        if step.abs() <= S::lit(1e-14) * t.abs().max(S::one()) {
            break;
        }
    }
    if t <= eps_time {
        if c <= inside_tol {
            return Err(Error::InvalidState("position on a boundary with velocity pointing into the scatterer".into()));
        }
        return Ok(Probe::Miss);
    }
    if t <= window.0 - eps_time || t > window.1 {
        return Ok(Probe::Miss);
    }
    let normal = s.add_scaled(&t, u).normalized();
    Ok(Probe::Hit(Hit { t, scatterer: 0, normal, cos_phi: root / radius }))
}

/// Earliest collision in `(eps_time, t_max]` after the phase point, with
/// `t` measured from the phase point. `None` if the particle flies freely
/// until `t_max`.
pub fn next_collision<S: Scalar>(domain: &Domain<S>, x: &PhasePoint<S>, t_max: S) -> Result<Option<CollisionEvent<S>>> {
    let tol = domain.tolerances();
    let (eps_graze, eps_time) = (tol.graze, tol.time);
    let inside_tol = tol.surface;
    let (window_len, box_exit) = match domain.ambient() {
        Ambient::Torus { side } => (*side / S::two(), None),
        Ambient::Box { sides } => (t_max, Some(box_exit_time(&x.q, &x.v, sides))),
    };

    let mut best: Option<Hit<S>> = None;
    let mut runner_up: Option<(S, usize)> = None;
    let mut graze: Option<(S, S)> = None;
    let consider = |hit: Hit<S>, best: &mut Option<Hit<S>>, runner_up: &mut Option<(S, usize)>| match best {
        Some(b) if hit.t >= b.t => {
            if runner_up.is_none_or(|(t, _)| hit.t < t) {
                *runner_up = Some((hit.t, hit.scatterer));
            }
        }
        _ => {
            if let Some(b) = best.take() {
                *runner_up = Some((b.t, b.scatterer));
            }
            *best = Some(hit);
        }
    };

    let mut w0 = S::zero();
    loop {
        let w1 = (w0 + window_len).min(t_max);
        for (idx, body) in domain.bodies().iter().enumerate() {
            match body {
                Body::Round(rb) => {
                    let u = rb.project(&x.v);
                    let q_start = x.q.add_scaled(&w0, &x.v);
                    let reach = (w1 - w0) * u.norm() + rb.radius + inside_tol;
                    let (p_start, images) = rb.images_near(&q_start, reach);
                    let p0 = p_start.add_scaled(&-w0, &u);
                    for image in images {
                        let inside = if w0 == S::zero() { inside_tol * rb.radius } else { S::infinity() };
                        match probe_round(&p0, &u, &image, rb.radius, (w0, w1), eps_graze, eps_time, inside)? {
                            Probe::Miss => {}
                            Probe::Graze(t, cos) => {
                                if graze.is_none_or(|(g, _)| t < g) {
                                    graze = Some((t, cos));
                                }
                            }
                            Probe::Hit(mut hit) => {
                                hit.scatterer = idx;
                                consider(hit, &mut best, &mut runner_up);
                            }
                        }
                    }
                }
                Body::Flat { point, normal } => {
                    if w0 > S::zero() {
                        continue;
                    }
                    let gap = (&x.q - point).dot(normal);
                    let vn = x.v.dot(normal);
                    if gap < -inside_tol {
                        return Err(Error::InvalidState("position lies behind a wall".into()));
                    }
                    if vn >= S::zero() {
                        continue;
                    }
                    let t = -gap / vn;
                    if t > t_max {
                        continue;
                    }
                    if t <= eps_time {
                        return Err(Error::InvalidState("position on a wall with velocity pointing into it".into()));
                    }
                    if -vn < eps_graze {
                        if graze.is_none_or(|(g, _)| t < g) {
                            graze = Some((t, -vn));
                        }
                        continue;
                    }
                    consider(Hit { t, scatterer: idx, normal: normal.clone(), cos_phi: -vn }, &mut best, &mut runner_up);
                }
            }
        }
        if best.is_some() || graze.is_some() || w1 >= t_max {
            break;
        }
        w0 = w1;
    }

    if let Some((tg, cos)) = graze {
        if best.as_ref().is_none_or(|b| tg <= b.t + eps_time) {
            return Err(Error::Grazing { t: tg.to_f64().unwrap_or(f64::NAN), cos_phi: cos.to_f64().unwrap_or(0.0) });
        }
    }
    if let Some(exit) = box_exit {
        if best.as_ref().is_none_or(|b| exit < b.t - eps_time) && exit <= t_max {
            return Err(Error::Escape { t: exit.to_f64().unwrap_or(f64::NAN) });
        }
    }
    let Some(hit) = best else { return Ok(None) };
    if let Some((t2, second)) = runner_up {
        if t2 - hit.t < eps_time {
            return Err(Error::MultipleCollision {
                t: hit.t.to_f64().unwrap_or(f64::NAN),
                first: hit.scatterer,
                second,
            });
        }
    }
    let v_out = reflect(&x.v, &hit.normal, eps_graze)?;
    let q = domain.wrap(&x.q.add_scaled(&hit.t, &x.v));
    Ok(Some(CollisionEvent {
        t: hit.t,
        q,
        scatterer: hit.scatterer,
        normal: hit.normal,
        cos_phi: hit.cos_phi,
        v_in: x.v.clone(),
        v_out,
    }))
}

fn box_exit_time<S: Scalar>(q: &Vector<S>, v: &Vector<S>, sides: &Vector<S>) -> S {
    (0..q.dim()).fold(S::infinity(), |m, k| {
        let t = if v[k] > S::zero() {
            (sides[k] - q[k]) / v[k]
        } else if v[k] < S::zero() {
            -q[k] / v[k]
        } else {
            S::infinity()
        };
        m.min(t)
    })
}

/// Runs the flow from `x0` up to time `horizon`, at most `max_events`
/// collisions. Singularities end the trajectory early with the matching
/// [`Termination`]; only an invalid starting point is an error.
pub fn flow<S: Scalar>(domain: &Domain<S>, x0: &PhasePoint<S>, horizon: S, max_events: usize) -> Result<Trajectory<S>> {
    x0.validate(domain)?;
    if !(horizon > S::zero()) {
        return Err(Error::Configuration("horizon must be positive".into()));
    }
    let mut t = S::zero();
    let mut state = PhasePoint { q: domain.wrap(&x0.q), v: x0.v.clone() };
    let mut events: Vec<CollisionEvent<S>> = Vec::new();
    let mut drift = S::zero();
    let eps_time = domain.tolerances().time;

    let (termination, detail) = loop {
        if events.len() >= max_events {
            break (Termination::EventCap, None);
        }
        let remaining = horizon - t;
        match next_collision(domain, &state, remaining) {
            Ok(Some(mut ev)) => {
                if ev.t < eps_time {
                    break (Termination::Grazing, Some("events closer than the time tolerance".to_string()));
                }
                t = t + ev.t;
                ev.t = t;
                let speed = ev.v_out.norm();
                drift = drift.max((speed - S::one()).abs());
                ev.v_out = ev.v_out.map(|&c| c / speed);
                ev.cos_phi = ev.v_out.dot(&ev.normal);
                state = PhasePoint { q: ev.q.clone(), v: ev.v_out.clone() };
                events.push(ev);
            }
            Ok(None) => {
                state.q = domain.wrap(&state.q.add_scaled(&remaining, &state.v));
                t = horizon;
                break (Termination::ReachedHorizon, None);
            }
            Err(e @ (Error::Grazing { .. } | Error::MultipleCollision { .. })) => {
                break (Termination::Grazing, Some(e.to_string()));
            }
            Err(e @ Error::Escape { .. }) => break (Termination::EscapeError, Some(e.to_string())),
            Err(e) if events.is_empty() => return Err(e),
            Err(e) => break (Termination::Grazing, Some(e.to_string())),
        }
    };

    Ok(Trajectory {
        start: x0.clone(),
        horizon,
        events,
        termination,
        end_time: t,
        end: state,
        max_speed_drift: drift,
        detail,
    })
}

/// Uniform random unit vector.
pub fn random_direction<S: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector<S> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return Vector::from_vec(g.iter().map(|x| S::lit(x / n)).collect()).normalized();
        }
    }
}

/// Uniform phase point in the billiard region with position at least
/// `clearance` away from every scatterer. Only defined on the torus.
pub fn sample_phase_point<S: Scalar, R: Rng + ?Sized>(domain: &Domain<S>, clearance: S, rng: &mut R) -> Result<PhasePoint<S>> {
    let side = match domain.ambient() {
        Ambient::Torus { side } => *side,
        Ambient::Box { .. } => return Err(Error::Configuration("phase-point sampling needs a torus".into())),
    };
    for _ in 0..1_000_000 {
        let q = Vector::from_vec((0..domain.dim()).map(|_| S::lit(rng.random::<f64>()) * side).collect());
        let q = domain.wrap(&q);
        if domain.nearest_scatterer(&q).is_none_or(|(_, g)| g > clearance) {
            return Ok(PhasePoint { q, v: random_direction(domain.dim(), rng) });
        }
    }
    Err(Error::Infeasible("could not place a phase point in the billiard region".into()))
}
