//! Variance-decay regimes of quadratic variations: the empirical
//! `var(Q)` over replicates, per increment order, against resolution on a
//! log-log scale. The predicted slope is `4(ν − m)` while that exceeds
//! `−d`, and `−d` beyond (with a logarithmic correction exactly at the
//! boundary).

use serde::Serialize;

use quadvar::covariance::MaternParams;
use quadvar::estimators::{QvSource, SampledQv};
use quadvar::fieldsim::CirculantSampler;
use quadvar::grid::GridSpec;

use crate::config::{Resolved, VarianceDecayParams};
use crate::error::{HarnessError, HarnessResult};
use crate::report::{fmt_g, ols_slope, sample_sd, write_summary, Csv, Summary};
use crate::runner::run_replicates;

#[derive(Debug, Clone, Serialize)]
pub struct SlopeRow {
    pub order: usize,
    pub slope: f64,
    pub slope_se: f64,
    pub predicted: f64,
    pub boundary_log_correction: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceDecayOutcome {
    pub slopes: Vec<SlopeRow>,
    pub replicate_failures: usize,
}

/// Theorem-style regime prediction for the log-log slope in dimension `d`.
pub fn predicted_slope(nu: f64, m: usize, d: usize) -> (f64, bool) {
    let fast = 4.0 * (nu - m as f64);
    if fast > -(d as f64) {
        (fast, false)
    } else {
        (-(d as f64), fast == -(d as f64))
    }
}

pub fn run_variance_decay(
    resolved: &Resolved,
    p: &VarianceDecayParams,
) -> HarnessResult<VarianceDecayOutcome> {
    let cov = MaternParams::isotropic(p.sigma, p.alpha, p.nu, 1).map_err(HarnessError::from_lib)?;
    let max_order = *p.orders.iter().max().unwrap();
    let resolutions: Vec<u32> = p.log2_resolutions.iter().map(|&k| 1u32 << k).collect();

    let mut var_csv = Csv::new(resolved, &["order", "resolution", "var_q", "mean_q", "replicates"]);
    let mut failures_total = 0usize;
    // per (order, resolution): variance of Q over replicates
    let mut table: Vec<Vec<f64>> = vec![Vec::new(); p.orders.len()];

    for (ni, &n) in resolutions.iter().enumerate() {
        let counts = vec![n as usize + max_order];
        let grid = GridSpec::at_origin(n, counts).map_err(HarnessError::from_lib)?;
        let sampler =
            CirculantSampler::new(&cov, grid, 2.0, 1e-12, 1e-4).map_err(HarnessError::from_lib)?;
        let orders = p.orders.clone();
        let nominal = vec![n as usize];
        let exponent = 2.0 * p.nu;
        let base = (ni * p.replicates_per_n) as u64;
        let (rows, failures) = run_replicates(resolved.workers, p.replicates_per_n, |r| {
            let field = sampler.sample(resolved.seed, base + r);
            let src = SampledQv::windowed(&field, nominal.clone());
            let mut qs = Vec::with_capacity(orders.len());
            for &m in &orders {
                qs.push(src.qv(m, &[1], exponent)?);
            }
            Ok(qs)
        })?;
        failures_total += failures;
        for (mi, &m) in p.orders.iter().enumerate() {
            let sample: Vec<f64> = rows.iter().map(|qs| qs[mi]).collect();
            let sd = sample_sd(&sample);
            let var = sd * sd;
            let mean = crate::report::mean(&sample);
            table[mi].push(var);
            var_csv.row(&[
                m.to_string(),
                n.to_string(),
                fmt_g(var),
                fmt_g(mean),
                sample.len().to_string(),
            ]);
        }
    }

    let log_n: Vec<f64> = resolutions.iter().map(|&n| (n as f64).ln()).collect();
    let mut slopes = Vec::new();
    for (mi, &m) in p.orders.iter().enumerate() {
        let log_v: Vec<f64> = table[mi].iter().map(|v| v.ln()).collect();
        let (slope, se) = ols_slope(&log_n, &log_v);
        let (predicted, boundary) = predicted_slope(p.nu, m, 1);
        slopes.push(SlopeRow {
            order: m,
            slope,
            slope_se: se,
            predicted,
            boundary_log_correction: boundary,
        });
    }

    let mut slope_csv = Csv::new(
        resolved,
        &["order", "slope", "slope_se", "predicted", "boundary_log_correction"],
    );
    for s in &slopes {
        slope_csv.row(&[
            s.order.to_string(),
            fmt_g(s.slope),
            fmt_g(s.slope_se),
            fmt_g(s.predicted),
            s.boundary_log_correction.to_string(),
        ]);
    }
    slope_csv.comment(&format!("replicate_failures={failures_total}"));

    let dir = &resolved.output_dir;
    var_csv.write(&dir.join("variance_decay_var.csv"))?;
    slope_csv.write(&dir.join("variance_decay_slopes.csv"))?;

    let outcome = VarianceDecayOutcome {
        slopes,
        replicate_failures: failures_total,
    };
    #[derive(Serialize)]
    struct Diag {
        replicate_failures: usize,
    }
    write_summary(
        dir,
        &Summary {
            config: resolved,
            diagnostics: Diag {
                replicate_failures: failures_total,
            },
            results: &outcome.slopes,
        },
    )?;
    Ok(outcome)
}
