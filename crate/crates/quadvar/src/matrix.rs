//! Small dense upper-triangular matrices.
//!
//! Anisotropy matrices live in the quotient of determinant-one matrices by
//! rotations, represented by upper triangular matrices with positive
//! diagonal. Dimensions are tiny (`d ≤ 5` in practice), so everything is
//! stored row-major in a `Vec` with explicit loops.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular<T> {
    d: usize,
    data: Vec<T>, // row-major d×d, zeros below the diagonal
}

impl<T: Scalar> UpperTriangular<T> {
    /// Build from row-major entries; entries strictly below the diagonal
    /// must be zero.
    pub fn from_rows(d: usize, data: Vec<T>) -> Result<Self> {
        if d == 0 || data.len() != d * d {
            return Err(Error::InvalidParams(format!(
                "matrix data length {} does not match d = {d}",
                data.len()
            )));
        }
        for r in 0..d {
            for c in 0..r {
                if data[r * d + c] != T::zero() {
                    return Err(Error::InvalidParams(format!(
                        "entry ({r}, {c}) below the diagonal must be zero"
                    )));
                }
            }
        }
        Ok(Self { d, data })
    }

    /// Identity matrix.
    pub fn identity(d: usize) -> Self {
        let mut data = vec![T::zero(); d * d];
        for i in 0..d {
            data[i * d + i] = T::one();
        }
        Self { d, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.d + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.d + c] = v;
    }

    pub fn rows(&self) -> &[T] {
        &self.data
    }

    /// All diagonal entries strictly positive.
    pub fn has_positive_diagonal(&self) -> bool {
        (0..self.d).all(|i| self.get(i, i) > T::zero())
    }

    /// Product of diagonal entries.
    pub fn det(&self) -> T {
        (0..self.d).fold(T::one(), |acc, i| acc * self.get(i, i))
    }

    /// Matrix-vector product `A v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.d);
        (0..self.d)
            .map(|r| (r..self.d).fold(T::zero(), |acc, c| acc + self.get(r, c) * v[c]))
            .collect()
    }

    /// Euclidean norm of `A v`.
    pub fn transformed_norm(&self, v: &[T]) -> T {
        self.mul_vec(v)
            .into_iter()
            .fold(T::zero(), |acc, x| acc + x * x)
            .sqrt()
    }

    /// Euclidean norm of `A h` for an integer lattice direction.
    pub fn transformed_norm_lattice(&self, h: &[i64]) -> T {
        let v: Vec<T> = h.iter().map(|&c| T::c(c as f64)).collect();
        self.transformed_norm(&v)
    }

    /// Solve `Aᵀ u = g` for the leading `k×k` block (forward substitution,
    /// since `Aᵀ` is lower triangular). Errors on a zero diagonal entry.
    pub fn solve_transposed_leading(&self, k: usize, g: &[T]) -> Result<Vec<T>> {
        assert!(k <= self.d && g.len() == k);
        let mut u = vec![T::zero(); k];
        for i in 0..k {
            let mut s = g[i];
            for r in 0..i {
                s = s - self.get(r, i) * u[r];
            }
            let diag = self.get(i, i);
            if diag.abs() < T::c(1e-300) {
                return Err(Error::SingularMinor(i + 1));
            }
            u[i] = s / diag;
        }
        Ok(u)
    }

    /// Multiply every entry by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            d: self.d,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_lower_triangle_entries() {
        assert!(UpperTriangular::from_rows(2, vec![1.0, 2.0, 0.5, 1.0]).is_err());
        assert!(UpperTriangular::from_rows(2, vec![1.0, 2.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn det_and_mul() {
        let m = UpperTriangular::from_rows(2, vec![1.2, 0.5, 0.0, 1.0 / 1.2]).unwrap();
        assert_relative_eq!(m.det(), 1.0, epsilon = 1e-15);
        let v = m.mul_vec(&[1.0, 1.0]);
        assert_relative_eq!(v[0], 1.7, epsilon = 1e-15);
        assert_relative_eq!(v[1], 1.0 / 1.2, epsilon = 1e-15);
    }

    #[test]
    fn transpose_solve_round_trip() {
        let m = UpperTriangular::from_rows(3, vec![2.0, 1.0, -0.5, 0.0, 0.7, 0.3, 0.0, 0.0, 1.4]).unwrap();
        let u = [0.3, -1.2, 0.9];
        // g = Aᵀ u restricted to leading 3 block
        let mut g = [0.0; 3];
        for i in 0..3 {
            for r in 0..=i {
                g[i] += m.get(r, i) * u[r];
            }
        }
        let sol = m.solve_transposed_leading(3, &g).unwrap();
        for i in 0..3 {
            assert_relative_eq!(sol[i], u[i], epsilon = 1e-14);
        }
    }
}
