//! Replicate scheduling: a rayon pool sized by the configuration, with
//! order-deterministic aggregation and the replicate-failure policy.

use rayon::prelude::*;

use crate::error::{numerical_err, HarnessResult};

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Runs `f` for every replicate index across a pool of `workers` threads
/// (0 = rayon default) and returns results sorted by replicate index.
///
/// Failures are counted; the run aborts when they exceed
/// [`MAX_FAILURE_FRACTION`] of the replicates so that downstream RMSE
/// statistics stay comparable to complete-sample studies.
pub fn run_replicates<T: Send>(
    workers: usize,
    replicates: usize,
    f: impl Fn(u64) -> Result<T, quadvar::Error> + Send + Sync,
) -> HarnessResult<(Vec<T>, usize)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| numerical_err(format!("worker pool: {e}")))?;
    // indexed parallel collect keeps replicate order deterministic
    let results: Vec<Result<T, quadvar::Error>> =
        pool.install(|| (0..replicates as u64).into_par_iter().map(&f).collect());
    let mut ok = Vec::with_capacity(replicates);
    let mut failures = 0usize;
    let mut first_failure = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                failures += 1;
                if first_failure.is_none() {
                    first_failure = Some(e.to_string());
                }
            }
        }
    }
    if (failures as f64) > MAX_FAILURE_FRACTION * replicates as f64 {
        return Err(numerical_err(format!(
            "{failures}/{replicates} replicates failed (first: {})",
            first_failure.unwrap_or_default()
        )));
    }
    Ok((ok, failures))
}
