//! Periodic images of a scatterer, seen in the subspace transversal to its
//! flat directions.
//!
//! On the torus `R^D / (L Z^D)` a sphere or cylinder is repeated at every
//! lattice translate. Translates along the cylinder axis change nothing, so
//! only the projection of the lattice onto the transversal subspace matters.
//! We require that projection to be generated by linearly independent
//! projected basis vectors; that covers spheres, coordinate-aligned cylinders
//! and the pair cylinders of the hard-ball gas.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub(crate) struct ImageLattice<S> {
    generators: Vec<Vector<S>>,
    dual: Vec<Vector<S>>,
    dual_norms: Vec<S>,
    shortest: S,
}

impl<S: Scalar> ImageLattice<S> {
    /// `candidates` are the projected torus periods `P(L e_k)`. Zero vectors
    /// and duplicates up to sign are dropped; the remainder must be
    /// independent and span the transversal subspace of dimension `rank`.
    pub(crate) fn from_periods(candidates: Vec<Vector<S>>, rank: usize, scale: S) -> Result<Self> {
        let tiny = S::lit(1e-12) * scale;
        let mut generators: Vec<Vector<S>> = Vec::new();
        for g in candidates {
            if g.norm() <= tiny {
                continue;
            }
            let seen = generators
                .iter()
                .any(|h| (&g - h).norm() <= tiny || (&g + h).norm() <= tiny);
            if !seen {
                generators.push(g);
            }
        }
        if generators.len() != rank {
            return Err(Error::Construction(format!(
                "scatterer axis is not aligned with the torus lattice ({} distinct transversal periods, expected {})",
                generators.len(),
                rank
            )));
        }
        let gram = Matrix::from_fn(rank, |i, j| generators[i].dot(&generators[j]));
        let inv = gram
            .inverse(&(tiny * tiny))
            .ok_or_else(|| Error::Construction("transversal torus periods are linearly dependent".into()))?;
        let dim = generators[0].dim();
        let dual: Vec<Vector<S>> = (0..rank)
            .map(|k| {
                (0..rank).fold(Vector::zeros(dim), |acc, j| acc.add_scaled(inv.get(k, j), &generators[j]))
            })
            .collect();
        let dual_norms = dual.iter().map(Vector::norm).collect();
        let mut lattice = ImageLattice { generators, dual, dual_norms, shortest: S::zero() };
        lattice.shortest = lattice.shortest_vector();
        Ok(lattice)
    }

    pub(crate) fn shortest(&self) -> S {
        self.shortest
    }

    fn point(&self, coords: &[i64]) -> Vector<S> {
        let dim = self.generators[0].dim();
        coords
            .iter()
            .zip(&self.generators)
            .fold(Vector::zeros(dim), |acc, (&n, g)| acc.add_scaled(&S::from_i64(n).unwrap(), g))
    }

    fn coords(&self, p: &Vector<S>) -> Vec<S> {
        self.dual.iter().map(|d| d.dot(p)).collect()
    }

    /// Lattice point closest to `p`.
    pub(crate) fn nearest(&self, p: &Vector<S>) -> Vector<S> {
        let base: Vec<i64> = self.coords(p).iter().map(|c| c.round().to_i64().unwrap_or(0)).collect();
        let mut best = self.point(&base);
        let mut best_dist = (p - &best).norm_squared();
        for_each_offset(&base, &vec![1; base.len()], |n| {
            let o = self.point(n);
            let dist = (p - &o).norm_squared();
            if dist < best_dist {
                best_dist = dist;
                best = o;
            }
        });
        best
    }

    /// All lattice points within `radius` of `center`.
    pub(crate) fn within(&self, center: &Vector<S>, radius: S) -> Vec<Vector<S>> {
        let coords = self.coords(center);
        let mut base = Vec::with_capacity(coords.len());
        let mut reach = Vec::with_capacity(coords.len());
        for (c, dn) in coords.iter().zip(&self.dual_norms) {
            let lo = (*c - radius * *dn).floor();
            let hi = (*c + radius * *dn).ceil();
            let mid = ((lo + hi) / S::two()).round();
            base.push(mid.to_i64().unwrap_or(0));
            reach.push((hi - mid).max(mid - lo).to_i64().unwrap_or(0).max(0));
        }
        let r2 = radius * radius;
        let mut out = Vec::new();
        for_each_offset(&base, &reach, |n| {
            let o = self.point(n);
            if (center - &o).norm_squared() <= r2 {
                out.push(o);
            }
        });
        out
    }

    fn shortest_vector(&self) -> S {
        let m = self.generators.len();
        let reach = if m <= 6 { 2 } else { 1 };
        let mut best = S::infinity();
        for_each_offset(&vec![0; m], &vec![reach; m], |n| {
            if n.iter().any(|&k| k != 0) {
                best = best.min(self.point(n).norm());
            }
        });
        best
    }
}

/// Visits every integer vector `base + k` with `|k_i| <= reach_i`.
fn for_each_offset(base: &[i64], reach: &[i64], mut f: impl FnMut(&[i64])) {
    let m = base.len();
    let mut k: Vec<i64> = reach.iter().map(|r| -r).collect();
    let mut n = vec![0i64; m];
    loop {
        for i in 0..m {
            n[i] = base[i] + k[i];
        }
        f(&n);
        let mut i = 0;
        loop {
            if i == m {
                return;
            }
            if k[i] < reach[i] {
                k[i] += 1;
                break;
            }
            k[i] = -reach[i];
            i += 1;
        }
    }
}
