use super::{Ambient, Domain, Scatterer};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::scalar::Scalar;

/// Torus of side `side` minus balls of radius `radius` at `centers`.
pub fn build_sinai<S: Scalar>(dim: usize, radius: S, side: S, centers: Vec<Vector<S>>) -> Result<Domain<S>> {
    if !(radius > S::zero() && S::two() * radius < side) {
        return Err(Error::Construction(format!("Sinai billiard needs 0 < 2r < L (r = {radius}, L = {side})")));
    }
    let scatterers = centers.into_iter().map(|center| Scatterer::Sphere { center, radius }).collect();
    Domain::new(dim, Ambient::Torus { side }, scatterers)
}

/// Configuration space of `balls` hard balls of radius `radius` on the torus
/// `R^dim / side Z^dim`, as a billiard in the unreduced torus of dimension
/// `balls * dim`.
///
/// The pair `(i, j)` is excluded where `|q_i - q_j| < 2 r` (minimal image).
/// In the Euclidean metric of the product space that is a cylinder of
/// radius `sqrt(2) r` around the diagonal `q_i = q_j`: its flat directions
/// are every coordinate of the other balls plus the joint translations
/// `(e_a, e_a) / sqrt(2)` of the pair, and its transversal directions are the
/// relative displacements `(e_a, -e_a) / sqrt(2)`.
pub fn build_hardball_gas<S: Scalar>(balls: usize, dim: usize, radius: S, side: S) -> Result<Domain<S>> {
    if balls < 2 || dim < 2 {
        return Err(Error::Construction(format!("hard-ball gas needs N >= 2 and d >= 2 (N = {balls}, d = {dim})")));
    }
    if !(radius > S::zero() && S::two() * radius < side / S::two()) {
        return Err(Error::Construction(format!("hard-ball gas needs 0 < 2r < L/2 (r = {radius}, L = {side})")));
    }
    let total = balls * dim;
    let root_half = S::FRAC_1_SQRT_2();
    let mut scatterers = Vec::new();
    let mut labels = Vec::new();
    for i in 0..balls {
        for j in i + 1..balls {
            let mut axis = Vec::with_capacity(total - dim);
            for k in (0..balls).filter(|&k| k != i && k != j) {
                for a in 0..dim {
                    axis.push(Vector::unit(total, k * dim + a));
                }
            }
            for a in 0..dim {
                let mut e = Vector::zeros(total);
                e[i * dim + a] = root_half;
                e[j * dim + a] = root_half;
                axis.push(e);
            }
            scatterers.push(Scatterer::Cylinder {
                axis_point: Vector::zeros(total),
                axis_directions: axis,
                radius: S::SQRT_2() * radius,
            });
            labels.push(Some(format!("pair({i},{j})")));
        }
    }
    Domain::new(total, Ambient::Torus { side }, scatterers)?.with_labels(labels)
}

/// Two equal balls of radius `radius` in relative coordinates: the torus
/// minus one ball of radius `2 r` at the origin.
pub fn reduce_pair_to_sinai<S: Scalar>(dim: usize, radius: S, side: S) -> Result<Domain<S>> {
    if !(radius > S::zero() && S::lit(4.0) * radius < side) {
        return Err(Error::Construction(format!("pair reduction needs 0 < 4r < L (r = {radius}, L = {side})")));
    }
    Domain::new(
        dim,
        Ambient::Torus { side },
        vec![Scatterer::Sphere { center: Vector::zeros(dim), radius: S::two() * radius }],
    )
}
