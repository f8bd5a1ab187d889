//! The linear maps used at a reflection point.
//!
//! All of them are written over [`Field`] so that the same code runs in
//! exact rational arithmetic. The reflection divides by `<nu, nu>` instead
//! of assuming a unit normal; for floats that changes nothing beyond
//! rounding, for rationals it keeps `R` an exact involution.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Field;

/// Orthogonal reflection across the hyperplane `normal^perp`:
/// `x - 2 <x, nu> nu` for unit `nu`.
pub fn reflect_operator<S: Field>(normal: &Vector<S>, x: &Vector<S>) -> Vector<S> {
    let coef = S::two() * x.dot(normal) / normal.norm_squared();
    x.add_scaled(&-coef, normal)
}

fn check_graze<S: Field>(v_dot_nu: &S, eps_graze: &S) -> Result<()> {
    if v_dot_nu.abs() < *eps_graze {
        return Err(Error::Grazing {
            t: f64::NAN,
            cos_phi: v_dot_nu.abs().to_f64().unwrap_or(0.0),
        });
    }
    Ok(())
}

/// `V`: the `v`-parallel projection of `v^perp` onto the tangent hyperplane
/// `nu^perp`, `x - (<x, nu> / <v, nu>) v`.
pub fn projection_v<S: Field>(v: &Vector<S>, normal: &Vector<S>, x: &Vector<S>, eps_graze: &S) -> Result<Vector<S>> {
    let denom = v.dot(normal);
    check_graze(&denom, eps_graze)?;
    Ok(x.add_scaled(&-(x.dot(normal) / denom), v))
}

/// `V*`: the `nu`-parallel projection of the tangent hyperplane onto
/// `v^perp`, `y - (<y, v> / <nu, v>) nu`. Adjoint of [`projection_v`] on all
/// of `R^d`.
pub fn projection_v_star<S: Field>(
    v: &Vector<S>,
    normal: &Vector<S>,
    y: &Vector<S>,
    eps_graze: &S,
) -> Result<Vector<S>> {
    let denom = v.dot(normal);
    check_graze(&denom, eps_graze)?;
    Ok(y.add_scaled(&-(y.dot(v) / denom), normal))
}

/// Second fundamental form at a boundary point, stored as a full symmetric
/// `d x d` matrix that annihilates the normal.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOperator<S> {
    matrix: Matrix<S>,
}

impl<S> CurvatureOperator<S> {
    pub fn from_matrix(matrix: Matrix<S>) -> Self {
        CurvatureOperator { matrix }
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> CurvatureOperator<T> {
        CurvatureOperator { matrix: self.matrix.map(f) }
    }
}

impl<S: Field> CurvatureOperator<S> {
    pub fn zero(dim: usize) -> Self {
        CurvatureOperator { matrix: Matrix::zeros(dim) }
    }

    /// `(1 / radius)` times the projector onto the complement of the given
    /// orthonormal directions (the flat axis directions and the normal).
    pub fn round(dim: usize, radius: &S, flat: &[&Vector<S>]) -> Self {
        let inv = S::one() / radius.clone();
        CurvatureOperator { matrix: Matrix::complement_projector(dim, flat).scale(&inv) }
    }

    pub fn apply(&self, x: &Vector<S>) -> Vector<S> {
        self.matrix.apply(x)
    }

    /// `<K x, x>`
    pub fn quadratic_form(&self, x: &Vector<S>) -> S {
        self.apply(x).dot(x)
    }

    pub fn scaled(&self, s: &S) -> Self {
        CurvatureOperator { matrix: self.matrix.scale(s) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_vec(x.to_vec())
    }

    #[test]
    fn reflection_examples() {
        let nu = v(&[1.0, 0.0]);
        assert_eq!(reflect_operator(&nu, &v(&[1.0, 0.0])), v(&[-1.0, 0.0]));
        assert_eq!(reflect_operator(&nu, &v(&[0.0, 1.0])), v(&[0.0, 1.0]));
        assert_eq!(reflect_operator(&nu, &v(&[3.0, 4.0])), v(&[-3.0, 4.0]));
    }

    #[test]
    fn projection_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let eps = 1e-10;
        // head-on: tangent vectors are untouched by both projections
        let out = projection_v(&v(&[0.0, -1.0]), &v(&[0.0, 1.0]), &v(&[1.0, 0.0]), &eps).unwrap();
        assert_eq!(out, v(&[1.0, 0.0]));
        let out = projection_v_star(&v(&[0.0, -1.0]), &v(&[0.0, 1.0]), &v(&[1.0, 0.0]), &eps).unwrap();
        assert_eq!(out, v(&[1.0, 0.0]));

        // oblique 45 degree incidence: x = (s, -s) in v^perp
        // V x = x - (<x,nu>/<v,nu>) v = (s,-s) - (-s/-s)(-s,-s) = (2s, 0) = (sqrt2, 0)
        let vin = v(&[-s, -s]);
        let nu = v(&[0.0, 1.0]);
        let out = projection_v(&vin, &nu, &v(&[s, -s]), &eps).unwrap();
        assert_abs_diff_eq!(out[0], 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.dot(&nu), 0.0, epsilon = 1e-15);

        // V* y = y - (<y,v>/<nu,v>) nu = (1,0) - ((-s)/(-s)) (0,1) = (1, -1)
        let y = v(&[1.0, 0.0]);
        let out = projection_v_star(&vin, &nu, &y, &eps).unwrap();
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.dot(&vin), 0.0, epsilon = 1e-15);
        let x = v(&[s, -s]);
        let lhs = projection_v(&vin, &nu, &x, &eps).unwrap().dot(&y);
        let rhs = x.dot(&out);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-15);

        // already tangent / already in v^perp
        let t = v(&[0.7, 0.0]);
        assert_eq!(projection_v(&vin, &nu, &t, &eps).unwrap(), t);
        let w = v(&[s, -s]);
        assert_eq!(projection_v_star(&vin, &nu, &w, &eps).unwrap(), w);
    }

    #[test]
    fn grazing_projection_is_rejected() {
        let r = projection_v(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), &v(&[0.0, 1.0]), &1e-10);
        assert!(matches!(r, Err(Error::Grazing { .. })));
    }

    fn unit(d: usize) -> impl Strategy<Value = Vector<f64>> {
        prop::collection::vec(-1.0..1.0f64, d)
            .prop_filter("non-degenerate", |x| x.iter().map(|a| a * a).sum::<f64>() > 1e-2)
            .prop_map(|x| Vector::from_vec(x).normalized())
    }

    proptest! {
        #[test]
        fn reflection_is_isometric_involution(nu in unit(4), x in prop::collection::vec(-5.0..5.0f64, 4)) {
            let x = Vector::from_vec(x);
            let rx = reflect_operator(&nu, &x);
            prop_assert!((rx.norm() - x.norm()).abs() <= 1e-12 * (1.0 + x.norm()));
            let rrx = reflect_operator(&nu, &rx);
            prop_assert!((&rrx - &x).max_abs() <= 1e-12 * (1.0 + x.norm()));
            let rn = reflect_operator(&nu, &nu);
            prop_assert!((&rn + &nu).max_abs() <= 1e-15);
        }

        #[test]
        fn projections_are_adjoint(vel in unit(3), nu in unit(3), a in prop::collection::vec(-1.0..1.0f64, 3), b in prop::collection::vec(-1.0..1.0f64, 3)) {
            prop_assume!(vel.dot(&nu).abs() > 0.05);
            let x = Vector::from_vec(a).reject_from(&vel);
            let y = Vector::from_vec(b).reject_from(&nu);
            let vx = projection_v(&vel, &nu, &x, &1e-10).unwrap();
            let vsy = projection_v_star(&vel, &nu, &y, &1e-10).unwrap();
            prop_assert!(vx.dot(&nu).abs() <= 1e-10 * (1.0 + vx.norm()));
            prop_assert!(vsy.dot(&vel).abs() <= 1e-10 * (1.0 + vsy.norm()));
            let scale = 1e-10 * x.norm() * y.norm();
            prop_assert!((vx.dot(&y) - x.dot(&vsy)).abs() <= scale.max(1e-300));
        }
    }
}
