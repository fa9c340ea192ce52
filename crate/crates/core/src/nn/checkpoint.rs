use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use super::config::{ArchitectureConfig, TrainingConfig};
use super::network::{Network, Tensor};
use crate::data::{argmax_rows, pad_and_mask, LabelSequence, MultivariateSeries, Normalizer};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"STINFCK\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub best_val_accuracy: f64,
    pub seed: u64,
    pub training: TrainingConfig,
    #[serde(default)]
    pub state_names: Vec<String>,
    #[serde(default)]
    pub channel_names: Vec<String>,
    #[serde(default)]
    pub sample_rate_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: ArchitectureConfig,
    normalizer: Normalizer,
    metadata: TrainingMetadata,
    tensors: Vec<TensorHeader>,
}

/// A trained network with the normalization it was trained under.
///
/// Immutable once built; `predict` takes `&self` so one checkpoint can serve
/// concurrent callers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub network: Network,
    pub normalizer: Normalizer,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `l x N_s` softmax rows.
    pub probabilities: Array2<f64>,
    pub labels: LabelSequence,
}

impl ModelCheckpoint {
    pub fn new(network: Network, normalizer: Normalizer, metadata: TrainingMetadata) -> Result<Self> {
        if normalizer.num_channels() != network.config().input_channels {
            return Err(Error::ChannelMismatch {
                expected: network.config().input_channels,
                found: normalizer.num_channels(),
            });
        }
        Ok(Self {
            network,
            normalizer,
            metadata,
        })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        self.network.config()
    }

    /// Normalizes, pads to the configured length, runs the network and
    /// truncates back to the series length.
    pub fn predict(&self, series: &MultivariateSeries) -> Result<Prediction> {
        let expected = self.config().input_channels;
        if series.num_channels() != expected {
            return Err(Error::ChannelMismatch {
                expected,
                found: series.num_channels(),
            });
        }
        let normalized = self.normalizer.apply(series)?;
        let padded = pad_and_mask(&normalized, self.config().max_length)?;
        let probs = self.network.forward_padded(&padded)?;
        let probabilities = probs.slice(ndarray::s![..series.len(), ..]).to_owned();
        let labels = LabelSequence::new(argmax_rows(probabilities.view()));
        Ok(Prediction {
            probabilities,
            labels,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            format_version: FORMAT_VERSION,
            config: self.config().clone(),
            normalizer: self.normalizer.clone(),
            metadata: self.metadata.clone(),
            tensors: self
                .network
                .parameters()
                .iter()
                .map(|t| TensorHeader {
                    name: t.name.clone(),
                    shape: t.value.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + 8 * self.network.num_parameters());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in self.network.parameters() {
            for v in t.value.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptCheckpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(corrupt("missing magic bytes"));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let body = bytes
            .get(16..16usize.saturating_add(header_len))
            .ok_or_else(|| corrupt("truncated header"))?;
        let raw: serde_json::Value =
            serde_json::from_slice(body).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let found = raw
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| corrupt("missing format_version"))? as u32;
        if found != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: FORMAT_VERSION,
                found,
            });
        }
        let header: Header =
            serde_json::from_value(raw).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let mut offset = 16 + header_len;
        let mut params = Vec::with_capacity(header.tensors.len());
        for th in header.tensors {
            let count: usize = th.shape.iter().product();
            let block = bytes
                .get(offset..offset + 8 * count)
                .ok_or_else(|| corrupt("truncated tensor data"))?;
            let values: Vec<f64> = block
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            offset += 8 * count;
            let value = ArrayD::from_shape_vec(IxDyn(&th.shape), values)
                .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
            params.push(Tensor { name: th.name, value });
        }
        if offset != bytes.len() {
            return Err(corrupt("trailing bytes after tensor data"));
        }
        let network = Network::from_parameters(header.config, params)?;
        Self::new(network, header.normalizer, header.metadata)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_checkpoint(checkpoint: &ModelCheckpoint, path: &Path) -> Result<()> {
    checkpoint.save(path)
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    ModelCheckpoint::load(path)
}

pub fn predict(checkpoint: &ModelCheckpoint, series: &MultivariateSeries) -> Result<Prediction> {
    checkpoint.predict(series)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::config::{ConvSpec, Variant};

    fn checkpoint() -> ModelCheckpoint {
        let cfg = ArchitectureConfig {
            variant: Variant::Hybrid,
            conv_layers: vec![ConvSpec::new(3, 3)],
            gru_layers: vec![4],
            dense_hidden: 5,
            leaky_alpha: 0.3,
            num_states: 3,
            input_channels: 2,
            max_length: 30,
        };
        let net = Network::new(cfg, 7).unwrap();
        let normalizer = Normalizer {
            mean: vec![0.5, -1.0],
            std: vec![2.0, 0.25],
        };
        let metadata = TrainingMetadata {
            epochs_run: 3,
            best_epoch: 2,
            final_train_loss: 0.4,
            best_val_accuracy: 0.8,
            seed: 7,
            training: TrainingConfig::default(),
            state_names: vec!["a".into(), "b".into(), "c".into()],
            channel_names: vec!["x".into(), "y".into()],
            sample_rate_hz: 5.0,
        };
        ModelCheckpoint::new(net, normalizer, metadata).unwrap()
    }

    fn series(len: usize) -> MultivariateSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect();
        MultivariateSeries::from_channels(&[a, b], 5.0, vec!["x".into(), "y".into()]).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let ckpt = checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        ckpt.save(&path).unwrap();
        let back = ModelCheckpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        let s = series(17);
        assert_eq!(back.predict(&s).unwrap(), ckpt.predict(&s).unwrap());
    }

    #[test]
    fn header_floats_survive_exactly() {
        let mut ckpt = checkpoint();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (m, s) in ckpt.normalizer.mean.iter_mut().zip(ckpt.normalizer.std.iter_mut()) {
            *m = rng.gen_range(-2000.0..2000.0);
            *s = rng.gen_range(1e-3..500.0);
        }
        let back = ModelCheckpoint::from_bytes(&ckpt.to_bytes().unwrap()).unwrap();
        for (a, b) in back.normalizer.mean.iter().chain(&back.normalizer.std).zip(ckpt.normalizer.mean.iter().chain(&ckpt.normalizer.std)) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn prediction_contract() {
        let p = checkpoint().predict(&series(12)).unwrap();
        assert_eq!(p.probabilities.dim(), (12, 3));
        for row in p.probabilities.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
        assert_eq!(p.labels.states, argmax_rows(p.probabilities.view()));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = checkpoint().to_bytes().unwrap();
        for cut in [4, 20, bytes.len() - 3] {
            assert!(matches!(
                ModelCheckpoint::from_bytes(&bytes[..cut]),
                Err(Error::CorruptCheckpoint(_))
            ));
        }
    }

    #[test]
    fn edited_version_is_rejected() {
        let bytes = checkpoint().to_bytes().unwrap();
        let key = b"\"format_version\":1";
        let at = bytes.windows(key.len()).position(|w| w == key).unwrap() + key.len() - 1;
        let mut edited = bytes.clone();
        edited[at] = b'7';
        assert!(matches!(
            ModelCheckpoint::from_bytes(&edited),
            Err(Error::VersionMismatch { expected: 1, found: 7 })
        ));
    }

    #[test]
    fn shape_edit_is_rejected() {
        let ckpt = checkpoint();
        let bytes = ckpt.to_bytes().unwrap();
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let mut header: serde_json::Value = serde_json::from_slice(&bytes[16..16 + header_len]).unwrap();
        // Swap two dims of the dense weight: same element count, wrong shape.
        let tensors = header["tensors"].as_array_mut().unwrap();
        let dense = tensors.iter_mut().find(|t| t["name"] == "dense.weight").unwrap();
        dense["shape"] = serde_json::json!([5, 4]);
        let json = serde_json::to_vec(&header).unwrap();
        let mut out = CHECKPOINT_MAGIC.to_vec();
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&bytes[16 + header_len..]);
        assert!(matches!(ModelCheckpoint::from_bytes(&out), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn channel_mismatch() {
        let s = MultivariateSeries::from_channels(
            &[vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]],
            5.0,
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        assert!(matches!(
            checkpoint().predict(&s),
            Err(Error::ChannelMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn too_long_series() {
        assert!(matches!(
            checkpoint().predict(&series(31)),
            Err(Error::LengthExceedsTarget { .. })
        ));
    }
}
