//! Report files: CSV tables with a resolved-configuration preamble and a
//! JSON summary alongside.
//!
//! Nothing time- or host-dependent is ever written, so a rerun with the
//! same configuration and seed produces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Resolved;
use crate::error::HarnessResult;

/// Formats a float with enough digits to round-trip exactly.
pub fn fmt_g(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x:.17e}")
    }
}

/// Formats to 12 significant digits (constants tables).
pub fn fmt_12(x: f64) -> String {
    format!("{x:.11e}")
}

/// A CSV table under construction.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(resolved: &Resolved, header: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# quadvar {} experiment={:?}", resolved.version, resolved.kind);
        let _ = writeln!(
            buf,
            "# seed={} scale={:?} workers={}",
            resolved.seed, resolved.scale, resolved.workers
        );
        let _ = writeln!(buf, "{}", header.join(","));
        Csv { buf }
    }

    pub fn comment(&mut self, text: &str) {
        // comments are injected before the header line would be ideal, but
        // appending keeps the writer single-pass; parsers skip '#' anywhere
        let _ = writeln!(self.buf, "# {text}");
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn write(self, path: &Path) -> HarnessResult<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.buf)?;
        Ok(())
    }
}

/// Summary JSON: resolved configuration, code version, diagnostics, and
/// experiment-specific headline values.
#[derive(Debug, Serialize)]
pub struct Summary<'a, D: Serialize, H: Serialize> {
    pub config: &'a Resolved,
    pub diagnostics: D,
    pub results: H,
}

pub fn write_summary<D: Serialize, H: Serialize>(
    dir: &Path,
    summary: &Summary<'_, D, H>,
) -> HarnessResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| crate::error::numerical_err(format!("summary serialization: {e}")))?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

/// RMSE of a sample of estimates against a target value.
pub fn rmse(estimates: &[f64], target: f64) -> f64 {
    let n = estimates.len() as f64;
    (estimates.iter().map(|e| (e - target).powi(2)).sum::<f64>() / n).sqrt()
}

/// Monte Carlo standard error of the RMSE (delta method on the mean of
/// squared errors).
pub fn rmse_se(estimates: &[f64], target: f64) -> f64 {
    let n = estimates.len() as f64;
    let sq: Vec<f64> = estimates.iter().map(|e| (e - target).powi(2)).collect();
    let mean = sq.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt() / (2.0 * mean.sqrt())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Ordinary least squares slope and its standard error for `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se)
}

/// Equal-width histogram over the sample range.
pub fn histogram(xs: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let mut b = ((x - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_of_constant_offset() {
        let est = vec![3.0; 16];
        assert!((rmse(&est, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(rmse_se(&est, 1.0), 0.0);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|a| 2.5 * a - 1.0).collect();
        let (slope, se) = ols_slope(&x, &y);
        assert!((slope - 2.5).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn histogram_covers_all_samples() {
        let xs = vec![0.0, 0.1, 0.5, 0.9, 1.0];
        let h = histogram(&xs, 4);
        assert_eq!(h.iter().map(|(_, _, c)| c).sum::<usize>(), xs.len());
    }
}
