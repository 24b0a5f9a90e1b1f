//! Gaussian random field simulation on lattices.
//!
//! Two samplers share a reproducible counter-based seeding scheme:
//!
//! * [`DenseSampler`] — exact sampling through a Cholesky factorization of
//!   the full covariance matrix (small grids; the factorization is done
//!   once and replicates are matrix-vector products),
//! * [`CirculantSampler`] — circulant embedding of the covariance on a
//!   padded torus, diagonalized by the FFT; each replicate costs one
//!   inverse transform. Negative spectral values are clipped to zero and
//!   the clipped mass fraction is always reported.
//!
//! Replicate streams are derived from `(master_seed, replicate_index)`
//! alone, so outputs are byte-identical regardless of how replicates are
//! scheduled across workers.

mod circulant;
mod dense;
mod rng;

pub use circulant::{next_fast_len, CirculantSampler, EmbeddingDiagnostics};
pub use dense::DenseSampler;
pub use rng::replicate_rng;

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::scalar::SimScalar;

/// Hard ceiling on dense-factorization grid sizes.
pub const DENSE_POINT_LIMIT: usize = 20_000;

/// Default clipped-mass fraction above which the embedding is rejected.
pub const DEFAULT_EMBEDDING_FAILURE_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    DenseFactorization,
    CirculantEmbedding,
}

/// Simulation configuration: grid (already enlarged by any stencil
/// margin), method, embedding controls, and the replicate seed pair.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub method: SimMethod,
    pub padding_factor: f64,
    pub eig_clip_tol: f64,
    pub embedding_failure_threshold: f64,
    pub master_seed: u64,
    pub replicate_index: u64,
}

impl SimConfig {
    pub fn dense(grid: GridSpec, master_seed: u64, replicate_index: u64) -> Self {
        Self {
            grid,
            method: SimMethod::DenseFactorization,
            padding_factor: 2.0,
            eig_clip_tol: 1e-12,
            embedding_failure_threshold: DEFAULT_EMBEDDING_FAILURE_THRESHOLD,
            master_seed,
            replicate_index,
        }
    }

    pub fn circulant(grid: GridSpec, master_seed: u64, replicate_index: u64) -> Self {
        Self {
            method: SimMethod::CirculantEmbedding,
            ..Self::dense(grid, master_seed, replicate_index)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == SimMethod::DenseFactorization
            && self.grid.total_points() > DENSE_POINT_LIMIT
        {
            return Err(Error::InvalidParams(format!(
                "dense method limited to {DENSE_POINT_LIMIT} points (grid has {})",
                self.grid.total_points()
            )));
        }
        if self.padding_factor < 1.0 {
            return Err(Error::InvalidParams(format!(
                "padding_factor = {} must be >= 1",
                self.padding_factor
            )));
        }
        if self.eig_clip_tol < 0.0 {
            return Err(Error::InvalidParams("eig_clip_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// One-shot exact draw through a dense factorization.
pub fn sample_dense<T: SimScalar>(cov: &dyn Covariance<T>, cfg: &SimConfig) -> Result<GridField<T>> {
    cfg.validate()?;
    let sampler = DenseSampler::new(cov, cfg.grid.clone())?;
    Ok(sampler.sample(cfg.master_seed, cfg.replicate_index))
}

/// One-shot draw through circulant embedding, returning the embedding
/// diagnostics alongside the field.
pub fn sample_circulant<T: SimScalar>(
    cov: &dyn Covariance<T>,
    cfg: &SimConfig,
) -> Result<(GridField<T>, EmbeddingDiagnostics)> {
    cfg.validate()?;
    let sampler = CirculantSampler::new(
        cov,
        cfg.grid.clone(),
        cfg.padding_factor,
        cfg.eig_clip_tol,
        cfg.embedding_failure_threshold,
    )?;
    let diag = sampler.diagnostics().clone();
    Ok((sampler.sample(cfg.master_seed, cfg.replicate_index), diag))
}
