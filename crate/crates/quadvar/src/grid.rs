//! Lattice geometry and observed field values.
//!
//! Observation sites are `(origin + index) / n` per axis: a `d`-dimensional
//! block of `counts` points with exact spacing `1/n` (the resolution `n` is
//! stored as an integer). Values are stored row-major with the last axis
//! fastest.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    n: u32,
    counts: Vec<usize>,
    origin: Vec<i64>,
}

impl GridSpec {
    pub fn new(n: u32, counts: Vec<usize>, origin: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("resolution n must be >= 1".into()));
        }
        if counts.is_empty() || counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidParams("counts must be nonempty and positive".into()));
        }
        if origin.len() != counts.len() {
            return Err(Error::InvalidParams("origin and counts dimension mismatch".into()));
        }
        Ok(Self { n, counts, origin })
    }

    /// Grid anchored at the lattice origin.
    pub fn at_origin(n: u32, counts: Vec<usize>) -> Result<Self> {
        let d = counts.len();
        Self::new(n, counts, vec![0; d])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn resolution(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    #[inline]
    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn spacing<T: Scalar>(&self) -> T {
        T::one() / T::of(self.n as usize)
    }

    pub fn total_points(&self) -> usize {
        self.counts.iter().product()
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.counts[k + 1];
        }
        s
    }

    /// Physical coordinates of the site at `index`.
    pub fn coords<T: Scalar>(&self, index: &[usize]) -> Vec<T> {
        let inv = self.spacing::<T>();
        index
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| (T::of(i) + T::c(o as f64)) * inv)
            .collect()
    }

    /// Grid with the same resolution, counts shrunk and origin shifted.
    pub fn sub_block(&self, lo: &[usize], counts: Vec<usize>) -> Result<Self> {
        let origin = self
            .origin
            .iter()
            .zip(lo)
            .map(|(&o, &l)| o + l as i64)
            .collect();
        Self::new(self.n, counts, origin)
    }
}

/// Iterates multi-indices of a block in row-major order.
pub struct IndexIter {
    counts: Vec<usize>,
    idx: Vec<usize>,
    done: bool,
}

impl IndexIter {
    pub fn new(counts: &[usize]) -> Self {
        Self {
            counts: counts.to_vec(),
            idx: vec![0; counts.len()],
            done: counts.iter().any(|&c| c == 0),
        }
    }
}

impl Iterator for IndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        for k in (0..self.idx.len()).rev() {
            self.idx[k] += 1;
            if self.idx[k] < self.counts[k] {
                return Some(out);
            }
            self.idx[k] = 0;
        }
        self.done = true;
        Some(out)
    }
}

/// Field values observed on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    spec: GridSpec,
    values: Vec<T>,
}

impl<T: Scalar> GridField<T> {
    pub fn new(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.total_points() {
            return Err(Error::InvalidParams(format!(
                "value count {} does not match grid ({} points)",
                values.len(),
                spec.total_points()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("field values must all be finite".into()));
        }
        Ok(Self { spec, values })
    }

    /// Field built by evaluating `f` at the physical coordinates of every site.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.total_points());
        for idx in IndexIter::new(spec.counts()) {
            values.push(f(&spec.coords::<T>(&idx)));
        }
        Self::new(spec, values)
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn linear_index(&self, index: &[usize]) -> usize {
        self.spec
            .strides()
            .iter()
            .zip(index)
            .map(|(s, i)| s * i)
            .sum()
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.values[self.linear_index(index)]
    }

    /// Sub-block starting at the low corner with the given per-axis counts
    /// (capped at the available counts).
    pub fn crop(&self, counts: &[usize]) -> Result<Self> {
        let capped: Vec<usize> = counts
            .iter()
            .zip(self.spec.counts())
            .map(|(&want, &have)| want.min(have))
            .collect();
        let out_spec = self.spec.sub_block(&vec![0; self.spec.dim()], capped.clone())?;
        let strides = self.spec.strides();
        let mut values = Vec::with_capacity(out_spec.total_points());
        for idx in IndexIter::new(&capped) {
            let lin: usize = strides.iter().zip(&idx).map(|(s, i)| s * i).sum();
            values.push(self.values[lin]);
        }
        GridField::new(out_spec, values)
    }
}
