//! Declarative experiment configuration.
//!
//! A config is a TOML document. It is checked in three stages: against the
//! JSON Schema in `schema/config.schema.json`, by typed deserialization
//! (unknown keys rejected), and by cross-field checks in
//! [`ExperimentConfig::validate`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, ExperimentError, Result};

/// JSON Schema for configuration documents.
pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    ShapeTable,
    FrameTable,
    Earthquake,
    Bench,
}

impl ScenarioKind {
    pub fn file_prefix(&self) -> &'static str {
        match self {
            Self::ShapeTable => "shape",
            Self::FrameTable => "frame",
            Self::Earthquake => "quake",
            Self::Bench => "bench",
        }
    }

    /// Replicate count used by `--full-scale`.
    pub fn full_scale_replicates(&self) -> usize {
        match self {
            Self::ShapeTable => 500,
            Self::FrameTable | Self::Earthquake => 1000,
            Self::Bench => 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(format!("unknown format {other:?} (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeEstimator {
    EMedian,
    IMean,
    IMedian,
    MoM,
}

impl ShapeEstimator {
    pub const ALL: [Self; 4] = [Self::EMedian, Self::IMean, Self::IMedian, Self::MoM];

    pub fn name(&self) -> &'static str {
        match self {
            Self::EMedian => "EMedian",
            Self::IMean => "IMean",
            Self::IMedian => "IMedian",
            Self::MoM => "MoM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameEstimatorName {
    Mean,
    Median,
}

impl FrameEstimatorName {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Median => "median",
        }
    }

    pub fn core(&self) -> pfm_core::bootstrap::FrameEstimator {
        match self {
            Self::Mean => pfm_core::bootstrap::FrameEstimator::Mean,
            Self::Median => pfm_core::bootstrap::FrameEstimator::Median,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerName {
    Rejection,
    Metropolis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), formats: default_formats() }
    }
}

/// Planar-shape study: complex Bingham samples with outliers orthogonal to the mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    /// Configuration ids, each in `1..=3`.
    pub shapes: Vec<u8>,
    pub n: usize,
    pub outliers: Vec<usize>,
    /// Leading Bingham eigenvalue per shape; defaults to 150, 150, 200.
    #[serde(default)]
    pub kappa: Option<Vec<f64>>,
    #[serde(default = "all_shape_estimators")]
    pub estimators: Vec<ShapeEstimator>,
    #[serde(default = "default_mom_groups")]
    pub mom_groups: usize,
}

fn all_shape_estimators() -> Vec<ShapeEstimator> {
    ShapeEstimator::ALL.to_vec()
}

fn default_mom_groups() -> usize {
    7
}

impl ShapeConfig {
    pub fn kappa_for(&self, position: usize) -> f64 {
        match &self.kappa {
            Some(k) => k[position],
            None => match self.shapes[position] {
                3 => 200.0,
                _ => 150.0,
            },
        }
    }
}

/// Pivotal-bootstrap coverage study inside a frame scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameBootstrapConfig {
    /// 1-based index into `cases`.
    pub case: usize,
    pub outliers: usize,
    /// Monte Carlo datasets, each bootstrapped.
    pub runs: usize,
    pub resamples: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_level() -> f64 {
    0.95
}

/// Frame study: frame Watson samples contaminated by a fixed frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    pub cases: Vec<[f64; 3]>,
    pub n: usize,
    pub outliers: Vec<usize>,
    #[serde(default = "all_frame_estimators")]
    pub estimators: Vec<FrameEstimatorName>,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerName,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub bootstrap: Option<FrameBootstrapConfig>,
}

fn all_frame_estimators() -> Vec<FrameEstimatorName> {
    vec![FrameEstimatorName::Mean, FrameEstimatorName::Median]
}

fn default_sampler() -> SamplerName {
    SamplerName::Rejection
}

fn default_burn_in() -> usize {
    1000
}

/// Moment-tensor analysis of one region, with its "sub" and "cont" edits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarthquakeConfig {
    /// Moment-tensor CSV; relative paths resolve against the config file.
    pub input: PathBuf,
    pub region: String,
    /// Events removed in both edited datasets.
    #[serde(default)]
    pub drop: Vec<String>,
    /// Events copied into the "cont" dataset.
    #[serde(default)]
    pub duplicate: Vec<String>,
    /// Extra copies added per duplicated event.
    #[serde(default = "default_copies")]
    pub copies: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_copies() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    /// Monte Carlo replicates (bootstrap resamples for `earthquake`); 0 is a dry run.
    pub replicates: usize,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub shape: Option<ShapeConfig>,
    #[serde(default)]
    pub frame: Option<FrameConfig>,
    #[serde(default)]
    pub earthquake: Option<EarthquakeConfig>,
    /// Directory that relative input paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        check_schema(&value)?;
        let cfg: Self = value.try_into().map_err(|e: toml::de::Error| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            ExperimentError::Config(m) => ExperimentError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.scenario {
            ScenarioKind::ShapeTable => {
                let Some(s) = &self.shape else {
                    return config_err("scenario shape-table needs a [shape] section");
                };
                validate_shape(s)
            }
            ScenarioKind::FrameTable => {
                let Some(f) = &self.frame else {
                    return config_err("scenario frame-table needs a [frame] section");
                };
                validate_frame(f)
            }
            ScenarioKind::Earthquake => {
                let Some(q) = &self.earthquake else {
                    return config_err("scenario earthquake needs an [earthquake] section");
                };
                validate_earthquake(q)
            }
            ScenarioKind::Bench => Ok(()),
        }?;
        if self.output.formats.is_empty() {
            return config_err("output.formats must list at least one format");
        }
        Ok(())
    }
}

fn check_schema(value: &toml::Value) -> Result<()> {
    let schema: serde_json::Value = serde_json::from_str(CONFIG_SCHEMA).expect("shipped schema is JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    let doc = serde_json::to_value(value).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let errors: Vec<String> = validator
        .iter_errors(&doc)
        .map(|e| {
            let at = e.instance_path.to_string();
            if at.is_empty() {
                e.to_string()
            } else {
                format!("{at}: {e}")
            }
        })
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        config_err(format!("schema violation: {}", errors.join("; ")))
    }
}

fn check_outliers(outliers: &[usize], n: usize) -> Result<()> {
    if outliers.is_empty() {
        return config_err("at least one contamination level required");
    }
    if let Some(o) = outliers.iter().find(|&&o| o > n) {
        return config_err(format!("{o} outliers exceed the sample size {n}"));
    }
    Ok(())
}

fn validate_shape(s: &ShapeConfig) -> Result<()> {
    if s.shapes.is_empty() {
        return config_err("shape.shapes must not be empty");
    }
    if let Some(id) = s.shapes.iter().find(|&&id| !(1..=3).contains(&id)) {
        return config_err(format!("unknown shape id {id} (expected 1, 2 or 3)"));
    }
    if s.n == 0 {
        return config_err("shape.n must be positive");
    }
    check_outliers(&s.outliers, s.n)?;
    if let Some(k) = &s.kappa {
        if k.len() != s.shapes.len() {
            return config_err("shape.kappa needs one value per shape");
        }
        if k.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return config_err("shape.kappa values must be finite and nonnegative");
        }
    }
    if s.estimators.is_empty() {
        return config_err("shape.estimators must not be empty");
    }
    if s.estimators.contains(&ShapeEstimator::MoM) && !(1..=s.n).contains(&s.mom_groups) {
        return config_err(format!("shape.mom_groups must lie in 1..={}", s.n));
    }
    Ok(())
}

fn validate_frame(f: &FrameConfig) -> Result<()> {
    if f.cases.is_empty() {
        return config_err("frame.cases must not be empty");
    }
    if f.cases.iter().flatten().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return config_err("frame concentrations must be finite and nonnegative");
    }
    if f.n == 0 {
        return config_err("frame.n must be positive");
    }
    check_outliers(&f.outliers, f.n)?;
    if f.estimators.is_empty() {
        return config_err("frame.estimators must not be empty");
    }
    if let Some(b) = &f.bootstrap {
        if !(1..=f.cases.len()).contains(&b.case) {
            return config_err(format!("frame.bootstrap.case must lie in 1..={}", f.cases.len()));
        }
        if b.outliers > f.n {
            return config_err("frame.bootstrap.outliers exceed frame.n");
        }
        if b.resamples < 2 {
            return config_err("frame.bootstrap.resamples must be at least 2");
        }
        if !(0.0 < b.level && b.level < 1.0) {
            return config_err("frame.bootstrap.level must lie in (0, 1)");
        }
    }
    Ok(())
}

fn validate_earthquake(q: &EarthquakeConfig) -> Result<()> {
    if q.region.is_empty() {
        return config_err("earthquake.region must not be empty");
    }
    if !(0.0 < q.level && q.level < 1.0) {
        return config_err("earthquake.level must lie in (0, 1)");
    }
    if q.copies == 0 && !q.duplicate.is_empty() {
        return config_err("earthquake.copies must be positive when events are duplicated");
    }
    Ok(())
}

/// Built-in configs mirroring the files under `configs/`.
pub fn builtin(kind: ScenarioKind) -> ExperimentConfig {
    let text = match kind {
        ScenarioKind::ShapeTable => include_str!("../configs/table1.toml"),
        ScenarioKind::FrameTable => include_str!("../configs/table2.toml"),
        ScenarioKind::Earthquake => include_str!("../configs/quake.toml"),
        ScenarioKind::Bench => include_str!("../configs/bench.toml"),
    };
    let mut cfg = ExperimentConfig::from_toml(text).expect("built-in configs are valid");
    cfg.base_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    cfg
}
