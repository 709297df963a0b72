//! Experiment configuration: one self-describing TOML document per run.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::expr::{self, ParseError};
use crate::partition::{MassMode, PartitionConfig, PartitionError};
use crate::region::{
    estimate_density_bounds, BoundaryCurve, DensityField, RegionError, RegionSpec,
};
use crate::sweep::SweepConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field '{field}': {source}")]
    Expr {
        field: &'static str,
        source: ParseError,
    },
    #[error("config field '{field}': {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Region(#[from] RegionError),
}

impl From<PartitionError> for ConfigError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::InvalidConfig { field, reason } => ConfigError::Invalid {
                field: field.to_string(),
                reason,
            },
            PartitionError::Region(r) => ConfigError::Region(r),
            other => ConfigError::Invalid {
                field: "partition".to_string(),
                reason: other.to_string(),
            },
        }
    }
}

impl ConfigError {
    /// True when the failure is a workload-density assumption violation
    /// rather than a malformed config.
    pub fn is_assumption_violation(&self) -> bool {
        matches!(self, ConfigError::Region(RegionError::AssumptionViolated { .. }))
    }
}

fn default_dt() -> f64 {
    1e-3
}
fn default_recompute() -> usize {
    100
}
fn default_resolution() -> f64 {
    crate::region::INLOOP_RESOLUTION
}
fn default_q() -> u32 {
    10
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_frame_stride() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub g_a: String,
    pub g_b: String,
    pub l: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub rho: String,
    pub rho_lower: Option<f64>,
    pub rho_upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MassModeSection {
    Incremental,
    FullQuadrature,
}

impl From<MassModeSection> for MassMode {
    fn from(m: MassModeSection) -> Self {
        match m {
            MassModeSection::Incremental => MassMode::Incremental,
            MassModeSection::FullQuadrature => MassMode::FullQuadrature,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub n: usize,
    pub kappa: f64,
    pub epsilon: f64,
    pub v: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_mass_mode")]
    pub mass_mode: MassModeSection,
    #[serde(default = "default_recompute")]
    pub recompute_every: usize,
    #[serde(default = "default_resolution")]
    pub quad_resolution: f64,
    pub initial_x: Option<Vec<f64>>,
}

fn default_mass_mode() -> MassModeSection {
    MassModeSection::Incremental
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sigma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_q")]
    pub q: u32,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { q: default_q() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub frames: bool,
    #[serde(default = "default_frame_stride")]
    pub frame_stride: usize,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            out_dir: default_out_dir(),
            frames: false,
            frame_stride: default_frame_stride(),
        }
    }
}

/// The raw document shape; unknown keys anywhere are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub region: RegionSection,
    pub density: DensitySection,
    pub partition: PartitionSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

/// A loaded experiment: compiled expressions, certified density bounds,
/// validated parameters.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub sweep: SweepConfig,
    pub q: u32,
    pub outputs: OutputsSection,
}

pub fn load_config(path: &Path) -> Result<Experiment, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: ExperimentConfig =
        toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    build_experiment(&raw)
}

pub fn build_experiment(raw: &ExperimentConfig) -> Result<Experiment, ConfigError> {
    let g_a = expr::parse(&raw.region.g_a, &["y"]).map_err(|source| ConfigError::Expr {
        field: "region.g_a",
        source,
    })?;
    let g_b = expr::parse(&raw.region.g_b, &["y"]).map_err(|source| ConfigError::Expr {
        field: "region.g_b",
        source,
    })?;
    let rho = expr::parse(&raw.density.rho, &["x", "y"]).map_err(|source| ConfigError::Expr {
        field: "density.rho",
        source,
    })?;

    let left = BoundaryCurve::new(g_a, raw.region.l)?;
    let right = BoundaryCurve::new(g_b, raw.region.l)?;
    let region = RegionSpec::new(left, right, raw.region.l)?;

    let (rho_lower, rho_upper) = match (raw.density.rho_lower, raw.density.rho_upper) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (est_lo, est_hi) = estimate_density_bounds(&rho, &region, 200)?;
            (lo.unwrap_or(est_lo), hi.unwrap_or(est_hi))
        }
    };
    let density = DensityField::new(rho, rho_lower, rho_upper, &region)?;

    let mut partition = PartitionConfig::new(
        raw.partition.n,
        raw.partition.kappa,
        raw.partition.epsilon,
        raw.partition.v,
    );
    partition.dt = raw.partition.dt;
    partition.mass_mode = raw.partition.mass_mode.into();
    partition.recompute_every = raw.partition.recompute_every;
    partition.quad_resolution = raw.partition.quad_resolution;
    partition.validate(region.length_l)?;

    if raw.sweep.sigma.is_nan() || raw.sweep.sigma <= 0.0 {
        return Err(ConfigError::Invalid {
            field: "sweep.sigma".to_string(),
            reason: format!("must be positive, got {}", raw.sweep.sigma),
        });
    }
    if raw.analysis.q == 0 {
        return Err(ConfigError::Invalid {
            field: "analysis.q".to_string(),
            reason: "must be >= 1".to_string(),
        });
    }
    if raw.outputs.frame_stride == 0 {
        return Err(ConfigError::Invalid {
            field: "outputs.frame_stride".to_string(),
            reason: "must be >= 1".to_string(),
        });
    }

    if let Some(initial) = &raw.partition.initial_x {
        let a = region.left.value_at(partition.epsilon)?;
        let b = region.right.value_at(partition.epsilon)?;
        if initial.len() != partition.n - 1 {
            return Err(ConfigError::Invalid {
                field: "partition.initial_x".to_string(),
                reason: format!(
                    "expected {} interior abscissae, got {}",
                    partition.n - 1,
                    initial.len()
                ),
            });
        }
        let mut prev = a;
        for (k, &x) in initial.iter().enumerate() {
            if x <= prev || x >= b {
                return Err(ConfigError::Invalid {
                    field: "partition.initial_x".to_string(),
                    reason: format!(
                        "abscissa {k} = {x} must lie strictly between {prev} and {b}"
                    ),
                });
            }
            prev = x;
        }
    }

    Ok(Experiment {
        sweep: SweepConfig {
            sigma: raw.sweep.sigma,
            partition,
            region,
            density,
            initial_interior: raw.partition.initial_x.clone(),
        },
        q: raw.analysis.q,
        outputs: raw.outputs.clone(),
    })
}
