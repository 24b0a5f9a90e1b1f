//! Experiment implementations.

mod constants;
mod fig3;
mod highd_alpha;
mod powexp;
mod table1;
mod variance_decay;

pub use constants::{run_constants, ConstantsOutcome};
pub use fig3::{run_fig3, Fig3Outcome};
pub use highd_alpha::{run_highd_alpha, HighdAlphaOutcome};
pub use powexp::{run_powexp, PowexpOutcome};
pub use table1::{run_table1, Table1Outcome};
pub use variance_decay::{run_variance_decay, VarianceDecayOutcome};

use quadvar::covariance::{GenCovParams, MaternParams};
use quadvar::matrix::UpperTriangular;

use crate::config::{Resolved, ResolvedParams};
use crate::error::{config_err, HarnessError, HarnessResult};

/// Dispatch a resolved experiment, writing all outputs under its
/// output directory.
pub fn run(resolved: &Resolved) -> HarnessResult<()> {
    match &resolved.params {
        ResolvedParams::Table1(p) => run_table1(resolved, p).map(|_| ()),
        ResolvedParams::Fig3(p) => run_fig3(resolved, p).map(|_| ()),
        ResolvedParams::VarianceDecay(p) => run_variance_decay(resolved, p).map(|_| ()),
        ResolvedParams::HighdAlpha(p) => run_highd_alpha(resolved, p).map(|_| ()),
        ResolvedParams::Powexp(p) => run_powexp(resolved, p).map(|_| ()),
        ResolvedParams::Constants(p) => run_constants(resolved, p).map(|_| ()),
    }
}

/// Build an upper-triangular anisotropy from configuration rows.
pub fn triangular_from_rows(rows: &[Vec<f64>]) -> HarnessResult<UpperTriangular<f64>> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(config_err("m_matrix must be square"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    UpperTriangular::from_rows(d, flat).map_err(HarnessError::from_lib)
}

pub fn matern_from_cfg(
    sigma: f64,
    alpha: f64,
    nu: f64,
    m_matrix: &[Vec<f64>],
) -> HarnessResult<MaternParams<f64>> {
    MaternParams::new(sigma, alpha, nu, triangular_from_rows(m_matrix)?)
        .map_err(HarnessError::from_lib)
}

/// Observation covariance of the two-component mixture `√c₁ Y₁ + √c₂ Y₂`
/// with component covariances `9/10 − |t|^{δ₁} + |t|²/10` and
/// `8/10 − |t|^{δ₂} + 2|t|²/10` (independent components):
/// `p(|t|) − c₁|t|^{δ₁} − c₂|t|^{δ₂}` with
/// `p(r) = (0.9c₁ + 0.8c₂) + (0.1c₁ + 0.2c₂) r²`.
pub fn fig3_mixture_cov(c1: f64, c2: f64, delta1: f64, delta2: f64) -> HarnessResult<GenCovParams<f64>> {
    GenCovParams::new(
        -c1,
        delta1,
        -c2,
        delta2,
        vec![0.9 * c1 + 0.8 * c2, 0.1 * c1 + 0.2 * c2],
    )
    .map_err(HarnessError::from_lib)
}

/// Per-axis counts for a simulation grid that leaves room for order-`m`
/// stencils along every direction of the set, on top of the nominal
/// observation window.
pub fn enlarged_counts(nominal: &[usize], dirs: &[Vec<i64>], max_order: usize) -> Vec<usize> {
    nominal
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let reach = dirs.iter().map(|h| h[k].unsigned_abs() as usize).max().unwrap_or(0);
            c + max_order * reach
        })
        .collect()
}
