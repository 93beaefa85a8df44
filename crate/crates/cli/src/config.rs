//! Run and sweep configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skrp_core::profiles::{ProfileSpec, SolitonParams, Tag};
use skrp_core::tensor::FdConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
    pub model: ModelConfig,
    #[serde(default)]
    pub plan: Vec<CheckConfig>,
    #[serde(default)]
    pub fd: FdConfig,
    #[serde(default)]
    pub seed: u64,
    /// Number of sampled chart points per check.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Multiplies every tolerance in the plan.
    #[serde(default = "one")]
    pub tol_scale: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "run".into()
}

fn default_points() -> usize {
    100
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
}

/// Either a closed-form/sampled spec or a soliton profile solved from its ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonConfig>,
    /// Closed interval; when absent an admissible interval is searched from `search_seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_seed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonConfig {
    pub params: SolitonParams,
    /// (φ, Q) through which the solution passes.
    pub anchor: (f64, f64),
    pub range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Shell {
        #[serde(default = "two")]
        m: usize,
        a: f64,
        epsilon: i32,
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor: Option<(f64, f64)>,
    },
    Annulus {
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor: Option<(f64, f64)>,
    },
    Sphere {
        k: f64,
        phi0: f64,
    },
    ProductS2 {
        k: f64,
        t: f64,
    },
    BallCoeffs {
        a: f64,
        c: f64,
    },
}

fn two() -> usize {
    2
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Shell { .. } => "shell",
            ModelConfig::Annulus { .. } => "annulus",
            ModelConfig::Sphere { .. } => "sphere",
            ModelConfig::ProductS2 { .. } => "product_s2",
            ModelConfig::BallCoeffs { .. } => "ball_coeffs",
        }
    }
}

/// One named check of a verification plan. Tolerances default to the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", deny_unknown_fields)]
pub enum CheckConfig {
    /// Gaussian curvature of a surface chart against a constant.
    #[serde(rename = "curvature_K")]
    CurvatureK {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        /// Additional probe radii (along rotating directions), e.g. close to the pole.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        extra_radii: Vec<f64>,
    },
    #[serde(rename = "skrp_blocks")]
    SkrpBlocks {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    #[serde(rename = "identities")]
    Identities {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default)]
        require_c: bool,
    },
    #[serde(rename = "conformal_einstein")]
    ConformalEinstein {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wedge_tolerance: Option<f64>,
    },
    #[serde(rename = "soliton")]
    Soliton {
        p: f64,
        s0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    #[serde(rename = "kahler_killing")]
    KahlerKilling {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    #[serde(rename = "normal_geodesics")]
    NormalGeodesics {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dphids_tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gauss_tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance_tolerance: Option<f64>,
    },
    #[serde(rename = "duality")]
    Duality {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        metric_tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi_tolerance: Option<f64>,
    },
    #[serde(rename = "ball_extension")]
    BallExtension {
        #[serde(default = "default_probe_radii")]
        probe_radii: Vec<f64>,
    },
    #[serde(rename = "distance_L")]
    DistanceL {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    #[serde(rename = "classification")]
    Classification {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected: Option<Tag>,
    },
}

fn default_probe_radii() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

/// Cartesian parameter sweep producing one CSV row per tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep: SweepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepKind {
    /// Sign scan of the boundary polynomial over β for each k.
    Bc1 { k: IntRange, beta: Range },
    /// Admissibility and symmetry of type A profiles over (K, η).
    TypeA {
        #[serde(default = "two_u32")]
        m: u32,
        #[serde(default)]
        alpha: f64,
        k: Range,
        eta: Range,
    },
}

fn two_u32() -> u32 {
    2
}

/// `count` evenly spaced values from `start` to `stop` inclusive (one value: `start`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::Config("sweep ranges must be finite".into()));
        }
        Ok(match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64).collect(),
        })
    }
}

/// Inclusive integer range; empty when `from > to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub from: u32,
    pub to: u32,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
