//! Linearised flow along a trajectory.
//!
//! Tangent vectors `(dq, dv)` move forward with the derivative of the flow;
//! normal covectors `n = (z, w)` move with its inverse adjoint, so that the
//! pairing `<dq, z> + <dv, w>` is conserved. Both are kept in the transversal
//! representation: every component is orthogonal to the current velocity.
//!
//! The single-step maps are generic over [`Field`]; [`adjoint_residual_exact`]
//! runs them in rational arithmetic, where the conservation law must hold
//! with no error at all.


use crate::dynamics::{CollisionEvent, Termination, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{projection_v, projection_v_star, reflect_operator, CurvatureOperator, Domain};
use crate::linalg::{orthonormal_complement, Vector};
use crate::scalar::{exact_from, Exact, Field, Scalar};

/// Infinitesimal displacement of a phase point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<S> {
    pub dq: Vector<S>,
    pub dv: Vector<S>,
}

/// Normal to a flow-invariant hypersurface: `(dq, dv)` is tangent to the
/// surface iff `<dq, z> + <dv, w> = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector<S> {
    pub z: Vector<S>,
    pub w: Vector<S>,
}

impl<S> TangentVector<S> {
    pub fn new(dq: Vector<S>, dv: Vector<S>) -> Self {
        TangentVector { dq, dv }
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> TangentVector<T> {
        TangentVector { dq: self.dq.map(&f), dv: self.dv.map(&f) }
    }
}

impl<S: Field> TangentVector<S> {
    pub fn pairing(&self, n: &Covector<S>) -> S {
        self.dq.dot(&n.z) + self.dv.dot(&n.w)
    }

    pub fn norm_squared(&self) -> S {
        self.dq.norm_squared() + self.dv.norm_squared()
    }
}

impl<S> Covector<S> {
    pub fn new(z: Vector<S>, w: Vector<S>) -> Self {
        Covector { z, w }
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Covector<T> {
        Covector { z: self.z.map(&f), w: self.w.map(&f) }
    }
}

impl<S: Field> Covector<S> {
    /// Infinitesimal Lyapunov function `<z, w>`.
    pub fn lyapunov(&self) -> S {
        self.z.dot(&self.w)
    }

    pub fn norm_squared(&self) -> S {
        self.z.norm_squared() + self.w.norm_squared()
    }

    pub fn scale(&self, s: &S) -> Self {
        Covector { z: self.z.scale(s), w: self.w.scale(s) }
    }
}

impl<S: Scalar> Covector<S> {
    pub fn norm(&self) -> S {
        self.norm_squared().sqrt()
    }

    pub fn normalized(&self) -> Self {
        self.scale(&(S::one() / self.norm()))
    }

    /// Checks `z, w` orthogonal to `v` (to `1e-10` relative) and `n != 0`.
    pub fn validate(&self, v: &Vector<S>) -> Result<()> {
        if self.z.dim() != v.dim() || self.w.dim() != v.dim() {
            return Err(Error::InvalidState(format!("covector must have dimension {}", v.dim())));
        }
        let norm = self.norm();
        if !(norm > S::zero()) || !norm.is_finite() {
            return Err(Error::InvalidState("covector must be finite and non-zero".into()));
        }
        let tol = S::lit(1e-10) * norm;
        if self.z.dot(v).abs() > tol || self.w.dot(v).abs() > tol {
            return Err(Error::InvalidState("covector components must be orthogonal to the velocity".into()));
        }
        Ok(())
    }
}

/// `(z, w - dt z)`
pub fn free_flight_covector<S: Field>(n: &Covector<S>, dt: &S) -> Covector<S> {
    Covector { z: n.z.clone(), w: n.w.add_scaled(&-dt.clone(), &n.z) }
}

/// `(dq + dt dv, dv)`
pub fn free_flight_tangent<S: Field>(dy: &TangentVector<S>, dt: &S) -> TangentVector<S> {
    TangentVector { dq: dy.dq.add_scaled(dt, &dy.dv), dv: dy.dv.clone() }
}

/// Geometry of one reflection as seen by the linear maps. The outgoing
/// velocity is recomputed as `R v_in` and `cos(phi)` as `-<v_in, nu>`, so the
/// tangent and covector maps see literally the same data.
struct Reflection<'a, S> {
    normal: &'a Vector<S>,
    v_in: &'a Vector<S>,
    v_out: Vector<S>,
    two_cos: S,
    curvature: &'a CurvatureOperator<S>,
    eps_graze: S,
}

impl<'a, S: Field> Reflection<'a, S> {
    fn new(event: &'a CollisionEvent<S>, curvature: &'a CurvatureOperator<S>, eps_graze: &S) -> Result<Self> {
        let cos = -event.v_in.dot(&event.normal);
        if cos < *eps_graze {
            return Err(Error::Grazing {
                t: event.t.to_f64().unwrap_or(f64::NAN),
                cos_phi: cos.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Reflection {
            normal: &event.normal,
            v_in: &event.v_in,
            v_out: reflect_operator(&event.normal, &event.v_in),
            two_cos: S::two() * cos,
            curvature,
            eps_graze: eps_graze.clone(),
        })
    }

    fn reflect(&self, x: &Vector<S>) -> Vector<S> {
        reflect_operator(self.normal, x)
    }

    /// `V_1 R w` for the covector map.
    fn outgoing_tangent_part(&self, w: &Vector<S>) -> Result<Vector<S>> {
        projection_v(&self.v_out, self.normal, &self.reflect(w), &self.eps_graze)
    }
}

/// Tangent map across a reflection:
/// `dq+ = R dq-`, `dv+ = R dv- + 2 cos(phi) R V* K V dq-`.
pub fn collision_tangent<S: Field>(
    dy: &TangentVector<S>,
    event: &CollisionEvent<S>,
    curvature: &CurvatureOperator<S>,
    eps_graze: &S,
) -> Result<TangentVector<S>> {
    let r = Reflection::new(event, curvature, eps_graze)?;
    let vdq = projection_v(r.v_in, r.normal, &dy.dq, &r.eps_graze)?;
    let focus = projection_v_star(r.v_in, r.normal, &r.curvature.apply(&vdq), &r.eps_graze)?;
    Ok(TangentVector { dq: r.reflect(&dy.dq), dv: r.reflect(&dy.dv.add_scaled(&r.two_cos, &focus)) })
}

/// Covector map across a reflection:
/// `z+ = R z- - 2 cos(phi) V1* K V1 R w-`, `w+ = R w-`, with `V1` the
/// projection along the outgoing velocity.
pub fn collision_covector<S: Field>(
    n: &Covector<S>,
    event: &CollisionEvent<S>,
    curvature: &CurvatureOperator<S>,
    eps_graze: &S,
) -> Result<Covector<S>> {
    let r = Reflection::new(event, curvature, eps_graze)?;
    let x = r.outgoing_tangent_part(&n.w)?;
    let back = projection_v_star(&r.v_out, r.normal, &r.curvature.apply(&x), &r.eps_graze)?;
    Ok(Covector { z: r.reflect(&n.z).add_scaled(&-r.two_cos.clone(), &back), w: r.reflect(&n.w) })
}

/// Closed-form drop of `Q` across a reflection,
/// `2 cos(phi) <K V1 R w-, V1 R w->`.
pub fn collision_decrement<S: Field>(
    n: &Covector<S>,
    event: &CollisionEvent<S>,
    curvature: &CurvatureOperator<S>,
    eps_graze: &S,
) -> Result<S> {
    let r = Reflection::new(event, curvature, eps_graze)?;
    let x = r.outgoing_tangent_part(&n.w)?;
    Ok(r.two_cos * r.curvature.quadratic_form(&x))
}

/// An event together with the curvature operator at its impact point.
#[derive(Debug, Clone)]
pub struct EventGeometry<S> {
    pub event: CollisionEvent<S>,
    pub curvature: CurvatureOperator<S>,
}

impl<S> EventGeometry<S> {
    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> EventGeometry<T> {
        EventGeometry { event: self.event.map(&f), curvature: self.curvature.map(&f) }
    }
}

pub fn event_geometry<S: Scalar>(domain: &Domain<S>, trajectory: &Trajectory<S>) -> Vec<EventGeometry<S>> {
    trajectory
        .events
        .iter()
        .map(|ev| EventGeometry { event: ev.clone(), curvature: domain.curvature_with_normal(ev.scatterer, &ev.normal) })
        .collect()
}

/// Knobs for [`transport_covector_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions<S> {
    /// Multiplies every curvature operator seen by the covector map. Anything
    /// but 1 breaks adjointness on purpose (negative control).
    pub curvature_scale: S,
    /// Re-project `z, w` onto `v_out^perp` after each reflection.
    pub reproject: bool,
}

impl<S: Scalar> Default for TransportOptions<S> {
    fn default() -> Self {
        TransportOptions { curvature_scale: S::one(), reproject: true }
    }
}

/// Free flight between two consecutive events (or the ends of the
/// trajectory). The covector anywhere on it follows from `start` by
/// [`free_flight_covector`].
#[derive(Debug, Clone)]
pub struct CovectorSegment<S> {
    pub index: usize,
    pub t_start: S,
    pub t_end: S,
    pub velocity: Vector<S>,
    pub start: Covector<S>,
}

impl<S: Scalar> CovectorSegment<S> {
    pub fn at(&self, t: S) -> Covector<S> {
        free_flight_covector(&self.start, &(t - self.t_start))
    }

    pub fn end(&self) -> Covector<S> {
        self.at(self.t_end)
    }
}

#[derive(Debug, Clone)]
pub struct CovectorJump<S> {
    pub event: usize,
    pub t: S,
    pub scatterer: usize,
    pub cos_phi: S,
    pub pre: Covector<S>,
    pub post: Covector<S>,
    /// Closed-form `Q(pre) - Q(post)`.
    pub decrement: S,
    /// Relative size of the re-projection correction.
    pub reprojection: S,
    /// Whether the curvature operator at the impact is identically zero.
    pub flat: bool,
}

/// Covector along a whole trajectory, stored at segment endpoints.
#[derive(Debug, Clone)]
pub struct TransportSeries<S> {
    pub initial: Covector<S>,
    pub end_time: S,
    pub termination: Termination,
    pub segments: Vec<CovectorSegment<S>>,
    pub jumps: Vec<CovectorJump<S>>,
}

impl<S: Scalar> TransportSeries<S> {
    /// Covector at time `t`; at an event time the post-collision value.
    pub fn covector_at(&self, t: S) -> Result<Covector<S>> {
        if !(t >= S::zero() && t <= self.end_time) {
            return Err(Error::OutOfRange {
                t: t.to_f64().unwrap_or(f64::NAN),
                start: 0.0,
                end: self.end_time.to_f64().unwrap_or(f64::NAN),
            });
        }
        let seg = self
            .segments
            .iter()
            .rev()
            .find(|s| s.t_start <= t)
            .unwrap_or(&self.segments[0]);
        Ok(seg.at(t))
    }

    pub fn final_covector(&self) -> Covector<S> {
        self.segments.last().map(|s| s.end()).unwrap_or_else(|| self.initial.clone())
    }
}

/// Transports `n0` along the trajectory with the default options.
pub fn transport_covector<S: Scalar>(domain: &Domain<S>, trajectory: &Trajectory<S>, n0: &Covector<S>) -> Result<TransportSeries<S>> {
    transport_covector_with(domain, trajectory, n0, &TransportOptions::default())
}

pub fn transport_covector_with<S: Scalar>(
    domain: &Domain<S>,
    trajectory: &Trajectory<S>,
    n0: &Covector<S>,
    options: &TransportOptions<S>,
) -> Result<TransportSeries<S>> {
    n0.validate(&trajectory.start.v)?;
    let eps = domain.tolerances().graze;
    let geometry = event_geometry(domain, trajectory);
    let mut segments = Vec::with_capacity(geometry.len() + 1);
    let mut jumps = Vec::with_capacity(geometry.len());
    let mut t = S::zero();
    let mut n = n0.clone();
    for (k, g) in geometry.iter().enumerate() {
        let seg = CovectorSegment {
            index: k,
            t_start: t,
            t_end: g.event.t,
            velocity: trajectory.segment_velocity(k).clone(),
            start: n,
        };
        let pre = seg.end();
        segments.push(seg);
        let curvature = if options.curvature_scale == S::one() {
            g.curvature.clone()
        } else {
            g.curvature.scaled(&options.curvature_scale)
        };
        let decrement = collision_decrement(&pre, &g.event, &curvature, &eps)?;
        let mut post = collision_covector(&pre, &g.event, &curvature, &eps)?;
        let mut reprojection = S::zero();
        if options.reproject {
            let v = &g.event.v_out;
            let scale = post.norm().max(S::min_positive_value());
            reprojection = (post.z.dot(v).abs().max(post.w.dot(v).abs())) / scale;
            post = Covector { z: post.z.reject_from(v), w: post.w.reject_from(v) };
        }
        jumps.push(CovectorJump {
            event: k,
            t: g.event.t,
            scatterer: g.event.scatterer,
            cos_phi: g.event.cos_phi,
            pre,
            post: post.clone(),
            decrement,
            reprojection,
            flat: g.curvature.matrix().max_abs() == S::zero(),
        });
        t = g.event.t;
        n = post;
    }
    segments.push(CovectorSegment {
        index: geometry.len(),
        t_start: t,
        t_end: trajectory.end_time,
        velocity: trajectory.end.v.clone(),
        start: n,
    });
    Ok(TransportSeries { initial: n0.clone(), end_time: trajectory.end_time, termination: trajectory.termination, segments, jumps })
}

/// Orthonormal basis of the transversal tangent space at velocity `v`:
/// `(e_k, 0)` and `(0, e_k)` for an orthonormal basis `e_k` of `v^perp`.
pub fn transversal_basis<S: Scalar>(v: &Vector<S>) -> Vec<TangentVector<S>> {
    let d = v.dim();
    let perp = orthonormal_complement(v);
    let zero = Vector::zeros(d);
    let mut basis: Vec<TangentVector<S>> =
        perp.iter().map(|e| TangentVector { dq: e.clone(), dv: zero.clone() }).collect();
    basis.extend(perp.iter().map(|e| TangentVector { dq: zero.clone(), dv: e.clone() }));
    basis
}

/// Tangent vector pushed forward along the whole trajectory.
pub fn transport_tangent<S: Field>(
    geometry: &[EventGeometry<S>],
    end_time: &S,
    dy0: &TangentVector<S>,
    eps_graze: &S,
) -> Result<TangentVector<S>> {
    let mut t = S::zero();
    let mut dy = dy0.clone();
    for g in geometry {
        dy = free_flight_tangent(&dy, &(g.event.t.clone() - t));
        dy = collision_tangent(&dy, &g.event, &g.curvature, eps_graze)?;
        t = g.event.t.clone();
    }
    Ok(free_flight_tangent(&dy, &(end_time.clone() - t)))
}

/// Settings of the pairing check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointOptions {
    /// Interior samples per free segment (endpoints are always sampled).
    pub grid: usize,
    /// Curvature multiplier applied in the covector map only.
    pub curvature_scale: f64,
}

impl Default for AdjointOptions {
    fn default() -> Self {
        AdjointOptions { grid: 8, curvature_scale: 1.0 }
    }
}

fn adjoint_residual_in<F: Field>(
    geometry: &[EventGeometry<F>],
    end_time: &F,
    n0: &Covector<F>,
    basis: &[TangentVector<F>],
    grid: usize,
    curvature_scale: &F,
    eps_graze: &F,
) -> Result<f64> {
    let n0_norm = n0.norm_squared().to_f64().unwrap_or(f64::NAN).sqrt();
    let scaled: Vec<CurvatureOperator<F>> = geometry.iter().map(|g| g.curvature.scaled(curvature_scale)).collect();
    let steps = F::from_usize(grid + 1).expect("grid size");
    let mut worst = 0.0f64;
    for dy0 in basis {
        let target = dy0.pairing(n0);
        let norm = dy0.norm_squared().to_f64().unwrap_or(f64::NAN).sqrt() * n0_norm;
        let mut record = |dy: &TangentVector<F>, n: &Covector<F>| {
            let r = (dy.pairing(n) - target.clone()).abs().to_f64().unwrap_or(f64::INFINITY) / norm;
            worst = worst.max(r);
        };
        let mut t = F::zero();
        let mut dy = dy0.clone();
        let mut n = n0.clone();
        let ends = geometry.iter().map(|g| g.event.t.clone()).chain(std::iter::once(end_time.clone()));
        for (k, t_end) in ends.enumerate() {
            let len = t_end.clone() - t.clone();
            for j in 0..=grid + 1 {
                let dt = len.clone() * F::from_usize(j).expect("grid index") / steps.clone();
                record(&free_flight_tangent(&dy, &dt), &free_flight_covector(&n, &dt));
            }
            if let Some(g) = geometry.get(k) {
                dy = collision_tangent(&free_flight_tangent(&dy, &len), &g.event, &g.curvature, eps_graze)?;
                n = collision_covector(&free_flight_covector(&n, &len), &g.event, &scaled[k], eps_graze)?;
                record(&dy, &n);
            }
            t = t_end;
        }
    }
    Ok(worst)
}

/// Worst normalised violation of `<D Phi^t dy, n_t> = <dy, n_0>` over the
/// basis vectors and sample times, computed in the scalar type `S`.
///
/// Both factors grow with the expansion rate of the orbit while their
/// pairing stays fixed, so rounding alone makes this grow like the product
/// of the two growth factors on long chaotic orbits.
pub fn adjoint_residual<S: Scalar>(
    domain: &Domain<S>,
    trajectory: &Trajectory<S>,
    n0: &Covector<S>,
    basis: &[TangentVector<S>],
    options: &AdjointOptions,
) -> Result<f64> {
    let geometry = event_geometry(domain, trajectory);
    adjoint_residual_in(
        &geometry,
        &trajectory.end_time,
        n0,
        basis,
        options.grid,
        &S::lit(options.curvature_scale),
        &domain.tolerances().graze,
    )
}

/// [`adjoint_residual`] evaluated in exact rational arithmetic on the
/// event data of the trajectory (every float is converted exactly).
pub fn adjoint_residual_exact<S: Scalar>(
    domain: &Domain<S>,
    trajectory: &Trajectory<S>,
    n0: &Covector<S>,
    basis: &[TangentVector<S>],
    options: &AdjointOptions,
) -> Result<f64> {
    adjoint_residual_over::<S, Exact>(domain, trajectory, n0, basis, options)
}

/// [`adjoint_residual`] after converting every float of the trajectory into
/// the field `F`. The conversion must be exact for the result to be.
pub fn adjoint_residual_over<S: Scalar, F: Field>(
    domain: &Domain<S>,
    trajectory: &Trajectory<S>,
    n0: &Covector<S>,
    basis: &[TangentVector<S>],
    options: &AdjointOptions,
) -> Result<f64> {
    let to_f = |x: &S| exact_from::<S, F>(*x);
    let geometry: Vec<EventGeometry<F>> =
        event_geometry(domain, trajectory).iter().map(|g| g.map(to_f)).collect();
    let basis: Vec<TangentVector<F>> = basis.iter().map(|b| b.map(to_f)).collect();
    adjoint_residual_in(
        &geometry,
        &to_f(&trajectory.end_time),
        &n0.map(to_f),
        &basis,
        options.grid,
        &to_f(&S::lit(options.curvature_scale)),
        &to_f(&domain.tolerances().graze),
    )
}
