use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Hybrid,
    CnnOnly,
    RnnOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Hybrid, Variant::RnnOnly, Variant::CnnOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Hybrid => "hybrid",
            Variant::CnnOnly => "cnn_only",
            Variant::RnnOnly => "rnn_only",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Variant::Hybrid),
            "cnn_only" | "cnn-only" | "cnn" => Ok(Variant::CnnOnly),
            "rnn_only" | "rnn-only" | "rnn" => Ok(Variant::RnnOnly),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel_size: usize,
}

impl ConvSpec {
    pub const fn new(filters: usize, kernel_size: usize) -> Self {
        Self {
            filters,
            kernel_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Five convolutions (64 filters, kernels 3..20), two GRUs of 128, L = 18000.
    PaperScale,
    /// Three convolutions of 32 filters, one GRU of 64, L = 3000.
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-scale" | "paper" => Ok(Preset::PaperScale),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub variant: Variant,
    pub conv_layers: Vec<ConvSpec>,
    pub gru_layers: Vec<usize>,
    pub dense_hidden: usize,
    pub leaky_alpha: f64,
    pub num_states: usize,
    pub input_channels: usize,
    pub max_length: usize,
}

impl ArchitectureConfig {
    pub fn preset(preset: Preset, input_channels: usize, num_states: usize) -> Self {
        match preset {
            Preset::PaperScale => Self {
                variant: Variant::Hybrid,
                conv_layers: [3, 5, 10, 15, 20].map(|k| ConvSpec::new(64, k)).to_vec(),
                gru_layers: vec![128, 128],
                dense_hidden: 128,
                leaky_alpha: 0.3,
                num_states,
                input_channels,
                max_length: 18_000,
            },
            Preset::Desk => Self {
                variant: Variant::Hybrid,
                conv_layers: [3, 5, 10].map(|k| ConvSpec::new(32, k)).to_vec(),
                gru_layers: vec![64],
                dense_hidden: 128,
                leaky_alpha: 0.3,
                num_states,
                input_channels,
                max_length: 3000,
            },
        }
    }

    /// Drops the recurrent or convolutional section for the ablation variants.
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        match variant {
            Variant::Hybrid => {}
            Variant::CnnOnly => self.gru_layers.clear(),
            Variant::RnnOnly => self.conv_layers.clear(),
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        match self.variant {
            Variant::Hybrid if self.conv_layers.is_empty() || self.gru_layers.is_empty() => {
                return fail("hybrid needs both convolutional and recurrent layers".into())
            }
            Variant::CnnOnly if !self.gru_layers.is_empty() || self.conv_layers.is_empty() => {
                return fail("cnn_only needs convolutions and no recurrent layers".into())
            }
            Variant::RnnOnly if !self.conv_layers.is_empty() || self.gru_layers.is_empty() => {
                return fail("rnn_only needs recurrent layers and no convolutions".into())
            }
            _ => {}
        }
        if self.conv_layers.iter().any(|c| c.filters == 0 || c.kernel_size == 0) {
            return fail("filters and kernel sizes must be at least 1".into());
        }
        if self.gru_layers.iter().any(|&h| h == 0) || self.dense_hidden == 0 {
            return fail("layer widths must be at least 1".into());
        }
        if !(self.leaky_alpha > 0.0 && self.leaky_alpha < 1.0) {
            return fail(format!("leaky alpha must be in (0, 1), got {}", self.leaky_alpha));
        }
        if self.num_states < 2 || self.input_channels == 0 || self.max_length == 0 {
            return fail("need at least 2 states, 1 channel and a positive max length".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    pub patience: usize,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 4,
            max_epochs: 80,
            patience: 10,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let rates_ok = self.learning_rate > 0.0
            && self.epsilon > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2);
        if !rates_ok || self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(format!("invalid training config {self:?}")));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::InvalidConfig("clip norm must be positive".into()));
        }
        Ok(())
    }
}
