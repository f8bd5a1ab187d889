//! Billiard tables: a flat torus or box with convex scatterers removed.
//!
//! Spheres and cylinders share one representation (a "round" body: a sphere
//! is a cylinder with no flat directions), which is what the event detector
//! and the curvature computation work with. Flat walls are half-spaces and
//! are only meaningful inside a box.

mod builders;
mod lattice;
mod operators;

pub use builders::{build_hardball_gas, build_sinai, reduce_pair_to_sinai};
pub use operators::{projection_v, projection_v_star, reflect_operator, CurvatureOperator};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;
use lattice::ImageLattice;

/// Region the scatterers are removed from.
#[derive(Debug, Clone, PartialEq)]
pub enum Ambient<S> {
    /// `[0, side)^d` with periodic identification.
    Torus { side: S },
    /// `[0, sides_k]` per coordinate, not periodic. The walls must be given
    /// as half-space scatterers; leaving the box is an error.
    Box { sides: Vector<S> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scatterer<S> {
    Sphere { center: Vector<S>, radius: S },
    /// Solid part `{ x : |P(x - axis_point)| < radius }` where `P` removes the
    /// components along the orthonormal `axis_directions`.
    Cylinder { axis_point: Vector<S>, axis_directions: Vec<Vector<S>>, radius: S },
    /// Solid part `{ x : <x - plane_point, plane_normal> < 0 }`; the normal
    /// points into the billiard region.
    Halfspace { plane_point: Vector<S>, plane_normal: Vector<S> },
}

impl<S> Scatterer<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            Scatterer::Sphere { .. } => "sphere",
            Scatterer::Cylinder { .. } => "cylinder",
            Scatterer::Halfspace { .. } => "halfspace",
        }
    }
}

/// Numerical thresholds shared by geometry and dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<S> {
    /// Boundary membership, absolute distance.
    pub surface: S,
    /// Minimum `cos(phi)` of a regular reflection.
    pub graze: S,
    /// Minimum separation of two events.
    pub time: S,
}

impl<S: Scalar> Tolerances<S> {
    /// Defaults for `f64`; coarser types get floors a fixed multiple of their
    /// machine epsilon.
    pub fn for_length_scale(length: S) -> Self {
        let eps = S::epsilon();
        Tolerances {
            surface: S::lit(1e-9).max(S::lit(100.0) * eps) * length,
            graze: S::lit(1e-10).max(S::lit(10.0) * eps),
            time: S::lit(1e-12).max(S::lit(10.0) * eps) * length,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RoundBody<S> {
    pub(crate) anchor: Vector<S>,
    pub(crate) axis: Vec<Vector<S>>,
    pub(crate) radius: S,
    projector: Matrix<S>,
    lattice: Option<ImageLattice<S>>,
}

impl<S: Scalar> RoundBody<S> {
    pub(crate) fn project(&self, x: &Vector<S>) -> Vector<S> {
        self.projector.apply(x)
    }

    /// Transversal offset of `q` from the nearest image of the axis.
    pub(crate) fn offset(&self, q: &Vector<S>) -> Vector<S> {
        let p = self.project(&(q - &self.anchor));
        match &self.lattice {
            Some(lat) => {
                let o = lat.nearest(&p);
                &p - &o
            }
            None => p,
        }
    }

    /// Transversal offset of `q` from the axis (unreduced) and the image
    /// centres within `reach` of it.
    pub(crate) fn images_near(&self, q: &Vector<S>, reach: S) -> (Vector<S>, Vec<Vector<S>>) {
        let p = self.project(&(q - &self.anchor));
        let images = match &self.lattice {
            Some(lat) => lat.within(&p, reach),
            None => {
                if p.norm() <= reach {
                    vec![Vector::zeros(p.dim())]
                } else {
                    Vec::new()
                }
            }
        };
        (p, images)
    }

    fn same_flat_span(&self, other: &Self) -> bool {
        let tol = S::lit(1e-12);
        let d = self.projector.dim();
        (0..d).all(|i| (0..d).all(|j| (*self.projector.get(i, j) - *other.projector.get(i, j)).abs() <= tol))
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Body<S> {
    Round(RoundBody<S>),
    Flat { point: Vector<S>, normal: Vector<S> },
}

/// Billiard table.
#[derive(Debug, Clone)]
pub struct Domain<S> {
    dim: usize,
    ambient: Ambient<S>,
    scatterers: Vec<Scatterer<S>>,
    labels: Vec<Option<String>>,
    bodies: Vec<Body<S>>,
    tolerances: Tolerances<S>,
}

impl<S: Scalar> Domain<S> {
    /// Validates the scatterers and precomputes their image lattices.
    ///
    /// Sphere and parallel-cylinder pairs must be disjoint. Cylinders with
    /// different flat directions are allowed to intersect: their common
    /// boundary points are multiple-collision singularities, which the
    /// dynamics reports instead of resolving.
    pub fn new(dim: usize, ambient: Ambient<S>, scatterers: Vec<Scatterer<S>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Construction(format!("dimension must be at least 2, got {dim}")));
        }
        let scale = match &ambient {
            Ambient::Torus { side } => {
                if !(side.is_finite() && *side > S::zero()) {
                    return Err(Error::Construction("torus side must be positive".into()));
                }
                *side
            }
            Ambient::Box { sides } => {
                if sides.dim() != dim || !sides.iter().all(|s| s.is_finite() && *s > S::zero()) {
                    return Err(Error::Construction("box needs one positive side length per dimension".into()));
                }
                sides.max_abs()
            }
        };
        let unit_tol = S::lit(1e-12);
        let mut bodies = Vec::with_capacity(scatterers.len());
        for (idx, sc) in scatterers.iter().enumerate() {
            let bad = |msg: String| Error::Construction(format!("scatterer {idx}: {msg}"));
            let body = match sc {
                Scatterer::Sphere { center, radius } => {
                    check_vec(center, dim).map_err(bad)?;
                    Self::round_body(idx, dim, &ambient, center.clone(), Vec::new(), *radius)?
                }
                Scatterer::Cylinder { axis_point, axis_directions, radius } => {
                    check_vec(axis_point, dim).map_err(bad)?;
                    if axis_directions.is_empty() || axis_directions.len() > dim - 2 {
                        return Err(bad(format!(
                            "cylinder needs between 1 and {} axis directions, got {}",
                            dim - 2,
                            axis_directions.len()
                        )));
                    }
                    for (i, a) in axis_directions.iter().enumerate() {
                        check_vec(a, dim).map_err(bad)?;
                        for (j, b) in axis_directions.iter().enumerate() {
                            let expect = if i == j { S::one() } else { S::zero() };
                            if (a.dot(b) - expect).abs() > unit_tol {
                                return Err(bad("cylinder axis directions are not orthonormal".into()));
                            }
                        }
                    }
                    Self::round_body(idx, dim, &ambient, axis_point.clone(), axis_directions.clone(), *radius)?
                }
                Scatterer::Halfspace { plane_point, plane_normal } => {
                    check_vec(plane_point, dim).map_err(bad)?;
                    check_vec(plane_normal, dim).map_err(bad)?;
                    if (plane_normal.norm() - S::one()).abs() > unit_tol {
                        return Err(bad("half-space normal must have unit length".into()));
                    }
                    if matches!(ambient, Ambient::Torus { .. }) {
                        return Err(bad("a half-space wraps onto itself on the torus; use a box".into()));
                    }
                    Body::Flat { point: plane_point.clone(), normal: plane_normal.clone() }
                }
            };
            bodies.push(body);
        }

        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                check_disjoint(i, &bodies[i], j, &bodies[j])?;
            }
        }

        let labels = vec![None; scatterers.len()];
        Ok(Domain { dim, ambient, scatterers, labels, bodies, tolerances: Tolerances::for_length_scale(scale) })
    }

    fn round_body(
        idx: usize,
        dim: usize,
        ambient: &Ambient<S>,
        anchor: Vector<S>,
        axis: Vec<Vector<S>>,
        radius: S,
    ) -> Result<Body<S>> {
        if !(radius.is_finite() && radius > S::zero()) {
            return Err(Error::Construction(format!("scatterer {idx}: radius must be positive")));
        }
        let flat: Vec<&Vector<S>> = axis.iter().collect();
        let projector = Matrix::complement_projector(dim, &flat);
        let lattice = match ambient {
            Ambient::Torus { side } => {
                let periods = (0..dim).map(|k| projector.apply(&Vector::unit(dim, k).scale(side))).collect();
                let lat = ImageLattice::from_periods(periods, dim - axis.len(), *side)
                    .map_err(|e| Error::Construction(format!("scatterer {idx}: {e}")))?;
                if S::two() * radius >= lat.shortest() {
                    return Err(Error::Construction(format!(
                        "scatterer {idx} wraps onto itself through the torus (diameter {} >= period {})",
                        S::two() * radius,
                        lat.shortest()
                    )));
                }
                Some(lat)
            }
            Ambient::Box { sides } => {
                if axis.is_empty() {
                    let inside = (0..dim).all(|k| anchor[k] - radius >= S::zero() && anchor[k] + radius <= sides[k]);
                    if !inside {
                        return Err(Error::Construction(format!("sphere {idx} sticks out of the box")));
                    }
                }
                None
            }
        };
        Ok(Body::Round(RoundBody { anchor, axis, radius, projector, lattice }))
    }

    pub fn with_labels(mut self, labels: Vec<Option<String>>) -> Result<Self> {
        if labels.len() != self.scatterers.len() {
            return Err(Error::Construction("one label slot per scatterer required".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances<S>) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient(&self) -> &Ambient<S> {
        &self.ambient
    }

    pub fn scatterers(&self) -> &[Scatterer<S>] {
        &self.scatterers
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn tolerances(&self) -> &Tolerances<S> {
        &self.tolerances
    }

    pub(crate) fn bodies(&self) -> &[Body<S>] {
        &self.bodies
    }

    /// Torus side, or the longest box side.
    pub fn length_scale(&self) -> S {
        match &self.ambient {
            Ambient::Torus { side } => *side,
            Ambient::Box { sides } => sides.max_abs(),
        }
    }

    /// Maps a position into the fundamental domain `[0, L)^d` (torus only;
    /// box positions are returned unchanged).
    pub fn wrap(&self, q: &Vector<S>) -> Vector<S> {
        match &self.ambient {
            Ambient::Torus { side } => q.map(|&x| {
                let y = x - *side * (x / *side).floor();
                if y >= *side || y < S::zero() {
                    S::zero()
                } else {
                    y
                }
            }),
            Ambient::Box { .. } => q.clone(),
        }
    }

    /// `a - b` under the minimal-image convention on the torus.
    pub fn displacement(&self, a: &Vector<S>, b: &Vector<S>) -> Vector<S> {
        let d = a - b;
        match &self.ambient {
            Ambient::Torus { side } => d.map(|&x| x - *side * (x / *side).round()),
            Ambient::Box { .. } => d,
        }
    }

    /// Signed distance from `q` to the boundary of scatterer `idx` (positive
    /// in the billiard region). For cylinders this is the transversal
    /// distance to the nearest image of the axis minus the radius.
    pub fn gap(&self, idx: usize, q: &Vector<S>) -> S {
        match &self.bodies[idx] {
            Body::Round(b) => b.offset(q).norm() - b.radius,
            Body::Flat { point, normal } => (q - point).dot(normal),
        }
    }

    /// Smallest gap over all scatterers together with its index.
    pub fn nearest_scatterer(&self, q: &Vector<S>) -> Option<(usize, S)> {
        (0..self.bodies.len())
            .map(|i| (i, self.gap(i, q)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Whether `q` lies in the closed billiard region (within the surface
    /// tolerance) and, for a box, inside the box.
    pub fn is_free(&self, q: &Vector<S>) -> bool {
        if let Ambient::Box { sides } = &self.ambient {
            let eps = self.tolerances.surface;
            if (0..self.dim).any(|k| q[k] < -eps || q[k] > sides[k] + eps) {
                return false;
            }
        }
        self.nearest_scatterer(q).is_none_or(|(_, g)| g >= -self.tolerances.surface)
    }

    fn on_boundary(&self, idx: usize, q: &Vector<S>) -> Result<()> {
        if idx >= self.bodies.len() {
            return Err(Error::Construction(format!("no scatterer with index {idx}")));
        }
        let gap = self.gap(idx, q);
        if gap.abs() > self.tolerances.surface {
            return Err(Error::BoundaryMismatch { scatterer: idx, gap: gap.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(())
    }

    /// Unit normal at a boundary point, pointing into the billiard region.
    pub fn normal_at(&self, idx: usize, q: &Vector<S>) -> Result<Vector<S>> {
        self.on_boundary(idx, q)?;
        Ok(match &self.bodies[idx] {
            Body::Round(b) => b.offset(q).normalized(),
            Body::Flat { normal, .. } => normal.clone(),
        })
    }

    /// Curvature operator at a boundary point: `(1/r)` times the projector
    /// onto the directions that are neither flat nor normal; zero for walls.
    pub fn curvature_at(&self, idx: usize, q: &Vector<S>) -> Result<CurvatureOperator<S>> {
        let nu = self.normal_at(idx, q)?;
        Ok(self.curvature_with_normal(idx, &nu))
    }

    /// Same as [`Domain::curvature_at`] with the normal already known.
    pub fn curvature_with_normal(&self, idx: usize, normal: &Vector<S>) -> CurvatureOperator<S> {
        match &self.bodies[idx] {
            Body::Round(b) => {
                let mut flat: Vec<&Vector<S>> = b.axis.iter().collect();
                flat.push(normal);
                CurvatureOperator::round(self.dim, &b.radius, &flat)
            }
            Body::Flat { .. } => CurvatureOperator::zero(self.dim),
        }
    }
}

fn check_vec<S: Scalar>(x: &Vector<S>, dim: usize) -> std::result::Result<(), String> {
    if x.dim() != dim {
        return Err(format!("vector of dimension {} in a {dim}-dimensional domain", x.dim()));
    }
    if !x.is_finite() {
        return Err("non-finite coordinate".into());
    }
    Ok(())
}

fn check_disjoint<S: Scalar>(i: usize, a: &Body<S>, j: usize, b: &Body<S>) -> Result<()> {
    let overlap = || Error::Construction(format!("scatterers {i} and {j} overlap"));
    match (a, b) {
        (Body::Round(ra), Body::Round(rb)) => {
            if ra.same_flat_span(rb) && rb.offset(&ra.anchor).norm() <= ra.radius + rb.radius {
                return Err(overlap());
            }
        }
        (Body::Round(r), Body::Flat { point, normal }) | (Body::Flat { point, normal }, Body::Round(r)) => {
            let along_axis = r.axis.iter().any(|a| a.dot(normal).abs() > S::lit(1e-12));
            if !along_axis && (&r.anchor - point).dot(normal) <= r.radius {
                return Err(overlap());
            }
        }
        // Two walls meet, if at all, in a corner of the table.
        (Body::Flat { .. }, Body::Flat { .. }) => {}
    }
    Ok(())
}
