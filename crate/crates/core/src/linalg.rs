//! Small dense vectors and square matrices of runtime dimension.

use std::ops::{Add, Index, IndexMut, Neg, Sub};

use crate::scalar::{Field, Scalar};

/// Coordinate vector in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<S>(Vec<S>);

impl<S> Vector<S> {
    pub fn from_vec(components: Vec<S>) -> Self {
        Vector(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Vector<T> {
        Vector(self.0.iter().map(f).collect())
    }
}

impl<S: Field> Vector<S> {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![S::zero(); dim])
    }

    /// Standard basis vector `e_k`.
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = S::one();
        v
    }

    pub fn dot(&self, other: &Self) -> S {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn norm_squared(&self) -> S {
        self.dot(self)
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: &S, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() + s.clone() * b.clone())
                .collect(),
        )
    }

    /// Removes the component along `dir` (which need not be normalised).
    pub fn reject_from(&self, dir: &Self) -> Self {
        let coef = self.dot(dir) / dir.norm_squared();
        self.add_scaled(&-coef, dir)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }
}

impl<S: Scalar> Vector<S> {
    pub fn norm(&self) -> S {
        self.norm_squared().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.map(|&x| x / n)
    }

    pub fn max_abs(&self) -> S {
        self.0.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl<S> Index<usize> for Vector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S> IndexMut<usize> for Vector<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

impl<S: Field> Add for &Vector<S> {
    type Output = Vector<S>;
    fn add(self, rhs: &Vector<S>) -> Vector<S> {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a.clone() + b.clone()).collect())
    }
}

impl<S: Field> Sub for &Vector<S> {
    type Output = Vector<S>;
    fn sub(self, rhs: &Vector<S>) -> Vector<S> {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a.clone() - b.clone()).collect())
    }
}

impl<S: Field> Neg for &Vector<S> {
    type Output = Vector<S>;
    fn neg(self) -> Vector<S> {
        self.map(|x| -x.clone())
    }
}

impl<S> From<Vec<S>> for Vector<S> {
    fn from(v: Vec<S>) -> Self {
        Vector(v)
    }
}

/// Square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    dim: usize,
    entries: Vec<S>,
}

impl<S> Matrix<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.dim + j]
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { dim: self.dim, entries: self.entries.iter().map(f).collect() }
    }
}

impl<S: Field> Matrix<S> {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, entries: vec![S::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Matrix { dim, entries }
    }

    /// `I - sum_k u_k u_k^T` for orthonormal `u_k`; each entry is computed by
    /// the same commutative expression as its transpose, so the result is
    /// bitwise symmetric.
    pub fn complement_projector(dim: usize, orthonormal: &[&Vector<S>]) -> Self {
        Self::from_fn(dim, |i, j| {
            let mut e = if i == j { S::one() } else { S::zero() };
            for u in orthonormal {
                e = e - u[i].clone() * u[j].clone();
            }
            e
        })
    }

    pub fn apply(&self, x: &Vector<S>) -> Vector<S> {
        debug_assert_eq!(self.dim, x.dim());
        Vector::from_vec(
            (0..self.dim)
                .map(|i| {
                    self.entries[i * self.dim..(i + 1) * self.dim]
                        .iter()
                        .zip(x.iter())
                        .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` when a pivot
    /// falls to `pivot_floor` or below in absolute value.
    pub fn inverse(&self, pivot_floor: &S) -> Option<Self> {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut inv = Self::identity(n).entries;
        for col in 0..n {
            let pivot = (col..n).max_by(|&r, &s| {
                a[r * n + col]
                    .abs()
                    .partial_cmp(&a[s * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[pivot * n + col].abs() <= *pivot_floor {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                    inv.swap(pivot * n + k, col * n + k);
                }
            }
            let p = a[col * n + col].clone();
            for k in 0..n {
                a[col * n + k] = a[col * n + k].clone() / p.clone();
                inv[col * n + k] = inv[col * n + k].clone() / p.clone();
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col].clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..n {
                    a[r * n + k] = a[r * n + k].clone() - f.clone() * a[col * n + k].clone();
                    inv[r * n + k] = inv[r * n + k].clone() - f.clone() * inv[col * n + k].clone();
                }
            }
        }
        Some(Matrix { dim: n, entries: inv })
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn max_abs(&self) -> S {
        self.entries.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Orthonormal basis of the orthogonal complement of `v` (Gram-Schmidt over
/// the standard basis, skipping the most `v`-aligned axis).
pub fn orthonormal_complement<S: Scalar>(v: &Vector<S>) -> Vec<Vector<S>> {
    let d = v.dim();
    let u = v.normalized();
    let skip = (0..d)
        .max_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let mut basis: Vec<Vector<S>> = Vec::with_capacity(d.saturating_sub(1));
    for k in (0..d).filter(|&k| k != skip) {
        let mut e = Vector::unit(d, k).reject_from(&u);
        for b in &basis {
            e = e.reject_from(b);
        }
        basis.push(e.normalized());
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_of_small_matrix() {
        let m = Matrix::from_fn(3, |i, j| [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]][i][j]);
        let inv = m.inverse(&1e-14).unwrap();
        for k in 0..3 {
            let col = inv.apply(&Vector::unit(3, k));
            let back = m.apply(&col);
            for i in 0..3 {
                assert_abs_diff_eq!(back[i], if i == k { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        assert!(Matrix::<f64>::zeros(2).inverse(&1e-14).is_none());
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let v = Vector::from_vec(vec![0.3, -0.4, 0.5, 0.1]);
        let basis = orthonormal_complement(&v);
        assert_eq!(basis.len(), 3);
        for (i, a) in basis.iter().enumerate() {
            assert_abs_diff_eq!(a.dot(&v), 0.0, epsilon = 1e-15);
            for (j, b) in basis.iter().enumerate() {
                assert_abs_diff_eq!(a.dot(b), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn projector_is_bitwise_symmetric() {
        let a = Vector::from_vec(vec![0.6, 0.8, 0.0]);
        let p = Matrix::complement_projector(3, &[&a]);
        assert!(p.is_symmetric());
        assert_abs_diff_eq!(p.apply(&a).norm(), 0.0, epsilon = 1e-15);
    }
}
