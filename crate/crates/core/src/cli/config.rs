use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::{default_alpha_grid, DEFAULT_FOLDS, DEFAULT_WIDTHS};
use crate::cpd::{CostKind, SearchMethod, DEFAULT_JUMP, DEFAULT_WIDTH};
use crate::data::{LengthBounds, SplitFractions};
use crate::metrics::{ClassInclusion, EvalConfig, Matching, DEFAULT_STRIP_SAMPLES};
use crate::nn::{Preset, TrainingConfig, Variant};
use crate::sim::Profile;

/// Everything a run needs. Loaded from TOML; every key is optional and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// The single source of randomness: simulation, splits, initialization,
    /// batching and cross-validation folds.
    pub seed: u64,
    pub paths: PathsConfig,
    pub data: DataConfig,
    pub generate: GenerateConfig,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub detect: DetectConfig,
    pub baseline: BaselineConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: PathsConfig::default(),
            data: DataConfig::default(),
            generate: GenerateConfig::default(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
            detect: DetectConfig::default(),
            baseline: BaselineConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Dataset directory or manifest.
    pub data: Option<PathBuf>,
    /// Model checkpoint; defaults to `<out>/model.ckpt`.
    pub model: Option<PathBuf>,
    /// Output directory.
    pub out: Option<PathBuf>,
    /// Ground-truth manifest for evaluate and report; defaults to `data`.
    pub truth: Option<PathBuf>,
    /// Prediction files for evaluate and report.
    pub pred: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub min_length: usize,
    pub max_length: usize,
    pub fractions: SplitFractions,
}

impl Default for DataConfig {
    fn default() -> Self {
        let b = LengthBounds::default();
        Self {
            min_length: b.min,
            max_length: b.max,
            fractions: SplitFractions::default(),
        }
    }
}

impl DataConfig {
    pub fn bounds(&self) -> LengthBounds {
        LengthBounds {
            min: self.min_length,
            max: self.max_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub flights: usize,
    pub profile: Profile,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            flights: 200,
            profile: Profile::Desk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Preset,
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Desk,
            variant: Variant::Hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub search: SearchMethod,
    pub cost: CostKind,
    pub penalty: f64,
    pub width: usize,
    pub jump: usize,
    /// Run the full sweep instead of the single configuration above.
    pub grid: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            search: SearchMethod::BottomUp,
            cost: CostKind::L2,
            penalty: 100.0,
            width: DEFAULT_WIDTH,
            jump: DEFAULT_JUMP,
            grid: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub widths: Vec<usize>,
    pub folds: usize,
    pub alphas: Vec<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            widths: DEFAULT_WIDTHS.to_vec(),
            folds: DEFAULT_FOLDS,
            alphas: default_alpha_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Tolerances in seconds.
    pub taus: Vec<f64>,
    pub inclusion: ClassInclusion,
    pub matching: Matching,
    /// Samples shown per state strip.
    pub strip_samples: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        let e = EvalConfig::default();
        Self {
            taus: e.taus,
            inclusion: e.inclusion,
            matching: e.matching,
            strip_samples: DEFAULT_STRIP_SAMPLES,
        }
    }
}

impl EvaluateConfig {
    pub fn scoring(&self) -> EvalConfig {
        EvalConfig {
            taus: self.taus.clone(),
            inclusion: self.inclusion,
            matching: self.matching,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.message().to_string())?;
        if cfg.training.seed != TrainingConfig::default().seed && cfg.training.seed != cfg.seed {
            return Err("set the top-level `seed` instead of `training.seed`".into());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.paths.model.clone().unwrap_or_else(|| self.out_dir().join("model.ckpt"))
    }

    /// Checks ranges that would otherwise fail deep inside a long run.
    pub fn validate(&self) -> Result<(), String> {
        let bounds = self.data.bounds();
        if bounds.min == 0 || bounds.min > bounds.max {
            return Err(format!("bad length bounds [{}, {}]", bounds.min, bounds.max));
        }
        self.data.fractions.validate().map_err(|e| e.to_string())?;
        if self.generate.flights == 0 {
            return Err("generate.flights must be at least 1".into());
        }
        self.training.validate().map_err(|e| e.to_string())?;
        if !(self.detect.penalty >= 0.0 && self.detect.penalty.is_finite()) {
            return Err(format!("detect.penalty must be non-negative, got {}", self.detect.penalty));
        }
        if self.detect.width < 2 || self.detect.jump == 0 {
            return Err("detect.width must be at least 2 and detect.jump at least 1".into());
        }
        if self.baseline.widths.is_empty() || self.baseline.widths.contains(&0) {
            return Err("baseline.widths must be non-empty positive integers".into());
        }
        if self.baseline.folds < 2 {
            return Err("baseline.folds must be at least 2".into());
        }
        if self.baseline.alphas.is_empty() || self.baseline.alphas.iter().any(|a| !(*a > 0.0)) {
            return Err("baseline.alphas must be non-empty and positive".into());
        }
        let taus = &self.evaluate.taus;
        if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err("evaluate.taus must be positive seconds".into());
        }
        Ok(())
    }
}
