//! Exact sampling via Cholesky factorization of the full covariance matrix.

use super::rng::replicate_rng;
use super::DENSE_POINT_LIMIT;
use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, IndexIter};
use crate::scalar::SimScalar;

/// Relative jitter ladder tried on the diagonal before giving up.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-14, 1e-12, 1e-10];

/// Factorized covariance over a grid; replicates are matrix-vector
/// products against a shared lower-triangular factor.
pub struct DenseSampler<T> {
    grid: GridSpec,
    /// lower-triangular Cholesky factor, row-major n×n (upper part unused)
    factor: Vec<T>,
    n_points: usize,
    /// relative jitter that was needed (0 when the plain factorization worked)
    jitter_used: f64,
}

impl<T: SimScalar> DenseSampler<T> {
    pub fn new(cov: &dyn Covariance<T>, grid: GridSpec) -> Result<Self> {
        let n_points = grid.total_points();
        if n_points > DENSE_POINT_LIMIT {
            return Err(Error::InvalidParams(format!(
                "dense method limited to {DENSE_POINT_LIMIT} points (grid has {n_points})"
            )));
        }
        let coords: Vec<Vec<T>> = IndexIter::new(grid.counts())
            .map(|idx| grid.coords::<T>(&idx))
            .collect();
        let d = grid.dim();
        // lower triangle of the covariance matrix
        let mut a = vec![T::zero(); n_points * n_points];
        let mut lag = vec![T::zero(); d];
        for i in 0..n_points {
            for j in 0..=i {
                for k in 0..d {
                    lag[k] = coords[i][k] - coords[j][k];
                }
                a[i * n_points + j] = cov.cov(&lag);
            }
        }
        let max_diag = (0..n_points)
            .map(|i| a[i * n_points + i])
            .fold(T::zero(), |m, v| if v > m { v } else { m });

        let mut jitter_used = f64::NAN;
        let mut work = Vec::new();
        for &jit in &JITTER_LADDER {
            work = a.clone();
            let bump = max_diag * T::c(jit);
            for i in 0..n_points {
                work[i * n_points + i] = work[i * n_points + i] + bump;
            }
            if cholesky_in_place(&mut work, n_points) {
                jitter_used = jit;
                break;
            }
        }
        if jitter_used.is_nan() {
            return Err(Error::IndefiniteCovariance {
                max_jitter: *JITTER_LADDER.last().unwrap(),
            });
        }
        Ok(Self {
            grid,
            factor: work,
            n_points,
            jitter_used,
        })
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Draw the replicate determined by `(master_seed, replicate_index)`.
    pub fn sample(&self, master_seed: u64, replicate_index: u64) -> GridField<T> {
        let mut rng = replicate_rng(master_seed, replicate_index);
        let z: Vec<T> = (0..self.n_points)
            .map(|_| T::standard_normal(&mut rng))
            .collect();
        let n = self.n_points;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let row = &self.factor[i * n..i * n + i + 1];
            let mut acc = T::zero();
            for (l, &zk) in row.iter().zip(&z) {
                acc = acc + *l * zk;
            }
            values.push(acc);
        }
        GridField::new(self.grid.clone(), values).expect("factor output is finite")
    }
}

/// In-place lower Cholesky; returns false when a pivot is not positive.
fn cholesky_in_place<T: SimScalar>(a: &mut [T], n: usize) -> bool {
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            let l = a[j * n + k];
            s = s - l * l;
        }
        if !(s > T::zero()) {
            return false;
        }
        let piv = s.sqrt();
        a[j * n + j] = piv;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                s = s - a[ri + k] * a[rj + k];
            }
            a[i * n + j] = s / piv;
        }
    }
    true
}
