//! TOML configuration schemas and resolution.
//!
//! One experiment per file. Unset fields take the built-in defaults of the
//! selected experiment kind at the selected scale (`desk` finishes on a
//! laptop in minutes, `full` reproduces the study-scale runs). The fully
//! resolved configuration is embedded in every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Full,
}

impl std::str::FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(format!("unknown scale {other:?} (expected desk|full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Table1,
    Fig3,
    VarianceDecay,
    HighdAlpha,
    Powexp,
    Constants,
}

/// Raw experiment file.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub scale: Option<Scale>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub table1: Table1Section,
    #[serde(default)]
    pub fig3: Fig3Section,
    #[serde(default)]
    pub variance_decay: VarianceDecaySection,
    #[serde(default)]
    pub highd_alpha: HighdAlphaSection,
    #[serde(default)]
    pub powexp: PowexpSection,
    #[serde(default)]
    pub constants: ConstantsSection,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Table1Section {
    pub replicates: Option<usize>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
    pub m_matrix: Option<Vec<Vec<f64>>>,
    pub resolution: Option<u32>,
    pub points_per_axis: Option<usize>,
    pub orders: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Fig3Section {
    pub replicates: Option<usize>,
    pub points_per_axis: Option<usize>,
    pub resolution: Option<u32>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub direction: Option<Vec<i64>>,
    pub padding_factor: Option<f64>,
    pub histogram_bins: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VarianceDecaySection {
    pub replicates_per_n: Option<usize>,
    pub log2_resolutions: Option<Vec<u32>>,
    pub orders: Option<Vec<usize>>,
    pub nu: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HighdAlphaSection {
    pub replicates: Option<usize>,
    pub dim: Option<usize>,
    pub resolutions: Option<Vec<u32>>,
    pub nu: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PowexpSection {
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub first_stage_p: Option<usize>,
    pub exact_resolutions: Option<Vec<u32>>,
    pub separation_p: Option<usize>,
    pub mc_replicates: Option<usize>,
    pub mc_points_per_axis: Option<usize>,
    pub mc_resolution: Option<u32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub matern: Option<Vec<(f64, usize)>>,
    pub power: Option<Vec<(usize, f64)>>,
    pub h_norm: Option<f64>,
    pub select_pq_for: Option<Vec<(f64, usize)>>,
}

/// Fully resolved experiment configuration (what actually runs, embedded
/// in every output).
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub workers: usize,
    pub scale: Scale,
    pub output_dir: PathBuf,
    pub version: String,
    pub params: ResolvedParams,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolvedParams {
    Table1(Table1Params),
    Fig3(Fig3Params),
    VarianceDecay(VarianceDecayParams),
    HighdAlpha(HighdAlphaParams),
    Powexp(PowexpParams),
    Constants(ConstantsParams),
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Params {
    pub replicates: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub nu: f64,
    pub m_matrix: Vec<Vec<f64>>,
    pub resolution: u32,
    pub points_per_axis: usize,
    pub orders: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig3Params {
    pub replicates: usize,
    pub points_per_axis: usize,
    pub resolution: u32,
    pub c1: f64,
    pub c2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub p: usize,
    pub q: usize,
    pub direction: Vec<i64>,
    pub padding_factor: f64,
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceDecayParams {
    pub replicates_per_n: usize,
    pub log2_resolutions: Vec<u32>,
    pub orders: Vec<usize>,
    pub nu: f64,
    pub sigma: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HighdAlphaParams {
    pub replicates: usize,
    pub dim: usize,
    pub resolutions: Vec<u32>,
    pub nu: f64,
    pub sigma: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowexpParams {
    pub sigma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub first_stage_p: usize,
    pub exact_resolutions: Vec<u32>,
    pub separation_p: usize,
    pub mc_replicates: usize,
    pub mc_points_per_axis: usize,
    pub mc_resolution: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsParams {
    pub matern: Vec<(f64, usize)>,
    pub power: Vec<(usize, f64)>,
    pub h_norm: f64,
    pub select_pq_for: Vec<(f64, usize)>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub scale: Option<Scale>,
    pub output_dir: Option<PathBuf>,
}

pub fn load_experiment(path: &Path, overrides: &Overrides) -> HarnessResult<Resolved> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let file: ExperimentFile =
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    resolve_experiment(file, overrides)
}

pub fn resolve_experiment(file: ExperimentFile, ov: &Overrides) -> HarnessResult<Resolved> {
    let kind = file
        .kind
        .ok_or_else(|| config_err("missing `kind` (table1|fig3|variance_decay|highd_alpha|powexp|constants)"))?;
    let scale = ov.scale.or(file.scale).unwrap_or(Scale::Desk);
    let seed = ov.seed.or(file.seed).unwrap_or(42);
    let workers = ov.workers.or(file.workers).unwrap_or(0);
    let output_dir = ov
        .output_dir
        .clone()
        .or(file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let params = match kind {
        ExperimentKind::Table1 => ResolvedParams::Table1(resolve_table1(&file.table1, scale)?),
        ExperimentKind::Fig3 => ResolvedParams::Fig3(resolve_fig3(&file.fig3, scale)?),
        ExperimentKind::VarianceDecay => {
            ResolvedParams::VarianceDecay(resolve_variance_decay(&file.variance_decay, scale)?)
        }
        ExperimentKind::HighdAlpha => {
            ResolvedParams::HighdAlpha(resolve_highd(&file.highd_alpha, scale)?)
        }
        ExperimentKind::Powexp => ResolvedParams::Powexp(resolve_powexp(&file.powexp, scale)?),
        ExperimentKind::Constants => {
            ResolvedParams::Constants(resolve_constants(&file.constants)?)
        }
    };

    Ok(Resolved {
        kind,
        seed,
        workers,
        scale,
        output_dir,
        version: crate::VERSION.to_string(),
        params,
    })
}

fn resolve_table1(s: &Table1Section, _scale: Scale) -> HarnessResult<Table1Params> {
    let p = Table1Params {
        replicates: s.replicates.unwrap_or(500),
        sigma: s.sigma.unwrap_or(1.5),
        alpha: s.alpha.unwrap_or(0.8),
        nu: s.nu.unwrap_or(1.75),
        m_matrix: s
            .m_matrix
            .clone()
            .unwrap_or_else(|| vec![vec![1.2, 0.5], vec![0.0, 1.0 / 1.2]]),
        resolution: s.resolution.unwrap_or(55),
        points_per_axis: s.points_per_axis.unwrap_or(56),
        orders: s.orders.clone().unwrap_or_else(|| vec![2, 3, 4]),
    };
    if p.replicates == 0 {
        return Err(config_err("table1.replicates must be >= 1"));
    }
    if p.orders.is_empty() || p.orders.iter().any(|&m| (m as f64) <= p.nu) {
        return Err(config_err("table1.orders must all exceed nu"));
    }
    Ok(p)
}

fn resolve_fig3(s: &Fig3Section, scale: Scale) -> HarnessResult<Fig3Params> {
    let (reps, pts, res) = match scale {
        Scale::Desk => (100, 256, 362),
        Scale::Full => (500, 1000, 1414),
    };
    let p = Fig3Params {
        replicates: s.replicates.unwrap_or(reps),
        points_per_axis: s.points_per_axis.unwrap_or(pts),
        resolution: s.resolution.unwrap_or(res),
        c1: s.c1.unwrap_or(100.0),
        c2: s.c2.unwrap_or(36.0),
        delta1: s.delta1.unwrap_or(0.2),
        delta2: s.delta2.unwrap_or(0.4),
        p: s.p.unwrap_or(2),
        q: s.q.unwrap_or(3),
        direction: s.direction.clone().unwrap_or_else(|| vec![1, 0]),
        padding_factor: s.padding_factor.unwrap_or(2.0),
        histogram_bins: s.histogram_bins.unwrap_or(30),
    };
    if p.replicates == 0 {
        return Err(config_err("fig3.replicates must be >= 1"));
    }
    if !(p.delta1 > 0.0 && p.delta2 > p.delta1) {
        return Err(config_err("fig3 requires 0 < delta1 < delta2"));
    }
    if p.q <= p.p {
        return Err(config_err("fig3 requires q > p"));
    }
    // the observation window must stay inside the positive-definiteness
    // domain of the mixture covariance: extent <= 1/sqrt(2)
    let extent = (p.points_per_axis as f64 - 1.0) / p.resolution as f64;
    if extent > 1.0 / 2.0f64.sqrt() + 1e-9 {
        return Err(config_err(format!(
            "fig3 grid extent {extent:.4} exceeds the covariance validity domain 1/sqrt(2)"
        )));
    }
    Ok(p)
}

fn resolve_variance_decay(s: &VarianceDecaySection, _scale: Scale) -> HarnessResult<VarianceDecayParams> {
    let p = VarianceDecayParams {
        replicates_per_n: s.replicates_per_n.unwrap_or(2000),
        log2_resolutions: s.log2_resolutions.clone().unwrap_or_else(|| (7..=12).collect()),
        orders: s.orders.clone().unwrap_or_else(|| vec![1, 2, 3]),
        nu: s.nu.unwrap_or(0.5),
        sigma: s.sigma.unwrap_or(1.0),
        alpha: s.alpha.unwrap_or(1.0),
    };
    if p.log2_resolutions.len() < 2 {
        return Err(config_err(
            "variance_decay needs at least two resolutions for a slope",
        ));
    }
    if p.replicates_per_n < 2 {
        return Err(config_err("variance_decay.replicates_per_n must be >= 2"));
    }
    Ok(p)
}

fn resolve_highd(s: &HighdAlphaSection, scale: Scale) -> HarnessResult<HighdAlphaParams> {
    let reps = match scale {
        Scale::Desk => 100,
        Scale::Full => 400,
    };
    let p = HighdAlphaParams {
        replicates: s.replicates.unwrap_or(reps),
        dim: s.dim.unwrap_or(5),
        resolutions: s.resolutions.clone().unwrap_or_else(|| vec![6, 8, 10, 12]),
        nu: s.nu.unwrap_or(0.5),
        sigma: s.sigma.unwrap_or(1.0),
        alpha: s.alpha.unwrap_or(1.0),
    };
    if p.dim <= 4 {
        return Err(config_err(format!(
            "highd_alpha requires dimension > 4 (got {})",
            p.dim
        )));
    }
    if p.resolutions.is_empty() {
        return Err(config_err("highd_alpha.resolutions must be nonempty"));
    }
    Ok(p)
}

fn resolve_powexp(s: &PowexpSection, scale: Scale) -> HarnessResult<PowexpParams> {
    let p = PowexpParams {
        sigma: s.sigma.unwrap_or(2.0),
        alpha: s.alpha.unwrap_or(1.5),
        delta: s.delta.unwrap_or(0.5),
        first_stage_p: s.first_stage_p.unwrap_or(1),
        exact_resolutions: s.exact_resolutions.clone().unwrap_or_else(|| vec![256, 1024]),
        separation_p: s.separation_p.unwrap_or(2),
        mc_replicates: s.mc_replicates.unwrap_or(match scale {
            Scale::Desk => 0,
            Scale::Full => 100,
        }),
        mc_points_per_axis: s.mc_points_per_axis.unwrap_or(96),
        mc_resolution: s.mc_resolution.unwrap_or(96),
    };
    if !(p.delta > 0.0 && p.delta < 2.0) {
        return Err(config_err("powexp.delta must lie in (0, 2)"));
    }
    if p.exact_resolutions.len() < 2 {
        return Err(config_err("powexp.exact_resolutions needs at least two entries"));
    }
    Ok(p)
}

fn resolve_constants(s: &ConstantsSection) -> HarnessResult<ConstantsParams> {
    Ok(ConstantsParams {
        matern: s.matern.clone().unwrap_or_else(|| {
            vec![
                (0.5, 1),
                (0.5, 2),
                (0.5, 3),
                (0.5, 4),
                (1.75, 2),
                (1.75, 3),
                (1.75, 4),
            ]
        }),
        power: s.power.clone().unwrap_or_else(|| {
            vec![(1, 0.3), (2, 0.2), (2, 0.4), (3, 0.2), (3, 0.4)]
        }),
        h_norm: s.h_norm.unwrap_or(1.0),
        select_pq_for: s.select_pq_for.clone().unwrap_or_else(|| vec![(0.5, 5), (1.75, 5)]),
    })
}

// ---------------------------------------------------------------------
// simulate / estimate configurations
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Matern,
    Gencov,
    Powexp,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub m_matrix: Option<Vec<Vec<f64>>>,
    pub c1: Option<f64>,
    pub delta1: Option<f64>,
    pub c2: Option<f64>,
    pub delta2: Option<f64>,
    pub poly: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethodKind {
    Dense,
    Circulant,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub model: ModelSection,
    pub method: SimMethodKind,
    pub resolution: u32,
    pub counts: Vec<usize>,
    #[serde(default)]
    pub origin: Option<Vec<i64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replicate: Option<u64>,
    #[serde(default)]
    pub padding_factor: Option<f64>,
    #[serde(default)]
    pub eig_clip_tol: Option<f64>,
    #[serde(default)]
    pub embedding_failure_threshold: Option<f64>,
    /// output path; `.csv` extension selects the CSV format
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Matern,
    MaternAlpha,
    C1c2,
    Powexp,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateFile {
    pub field: PathBuf,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub nominal: Option<Vec<usize>>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub delta1: Option<f64>,
    #[serde(default)]
    pub delta2: Option<f64>,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub direction: Option<Vec<i64>>,
    /// output JSON path
    pub out: PathBuf,
}

pub fn load_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> HarnessResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_experiment_file_resolves_with_defaults() {
        let file: ExperimentFile = toml::from_str("kind = \"table1\"").unwrap();
        let r = resolve_experiment(file, &Overrides::default()).unwrap();
        assert_eq!(r.seed, 42);
        match r.params {
            ResolvedParams::Table1(p) => {
                assert_eq!(p.replicates, 500);
                assert_eq!(p.resolution, 55);
                assert_eq!(p.orders, vec![2, 3, 4]);
                assert!((p.m_matrix[1][1] - 1.0 / 1.2).abs() < 1e-15);
            }
            _ => panic!("wrong params"),
        }
    }

    #[test]
    fn scale_switches_fig3_presets() {
        let file: ExperimentFile = toml::from_str("kind = \"fig3\"").unwrap();
        let desk = resolve_experiment(file.clone(), &Overrides::default()).unwrap();
        match desk.params {
            ResolvedParams::Fig3(p) => {
                assert_eq!((p.replicates, p.points_per_axis, p.resolution), (100, 256, 362))
            }
            _ => panic!(),
        }
        let full = resolve_experiment(
            file,
            &Overrides {
                scale: Some(Scale::Full),
                ..Default::default()
            },
        )
        .unwrap();
        match full.params {
            ResolvedParams::Fig3(p) => {
                assert_eq!((p.replicates, p.points_per_axis, p.resolution), (500, 1000, 1414))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<ExperimentFile, _> = toml::from_str("kind = \"table1\"\nbogus = 1");
        assert!(r.is_err());
    }

    #[test]
    fn fig3_domain_guard() {
        let file: ExperimentFile =
            toml::from_str("kind = \"fig3\"\n[fig3]\npoints_per_axis = 300\nresolution = 300")
                .unwrap();
        assert!(resolve_experiment(file, &Overrides::default()).is_err());
    }

    #[test]
    fn highd_dimension_guard() {
        let file: ExperimentFile =
            toml::from_str("kind = \"highd_alpha\"\n[highd_alpha]\ndim = 3").unwrap();
        let err = resolve_experiment(file, &Overrides::default());
        assert!(err.is_err());
    }

    #[test]
    fn variance_decay_single_resolution_rejected() {
        let file: ExperimentFile =
            toml::from_str("kind = \"variance_decay\"\n[variance_decay]\nlog2_resolutions = [8]")
                .unwrap();
        assert!(resolve_experiment(file, &Overrides::default()).is_err());
    }
}
