use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayD};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::checkpoint::{ModelCheckpoint, TrainingMetadata};
use super::config::{ArchitectureConfig, TrainingConfig};
use super::network::Network;
use crate::data::{argmax_rows, expand_labels, one_hot_encode, Dataset, Normalizer, Sample, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_accuracy\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_accuracy));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// A normalized input with its one-hot target, cut to the sample's own length.
struct Prepared {
    input: Array2<f64>,
    target: Array2<f64>,
    labels: Vec<usize>,
}

fn prepare(samples: &[&Sample], normalizer: &Normalizer, arch: &ArchitectureConfig) -> Result<Vec<Prepared>> {
    samples
        .iter()
        .map(|s| {
            let annotation = s
                .annotation
                .as_ref()
                .ok_or_else(|| Error::InvalidAnnotation(format!("sample {} has no labels", s.id)))?;
            let len = s.series.len();
            if len > arch.max_length {
                return Err(Error::LengthExceedsTarget {
                    length: len,
                    target: arch.max_length,
                });
            }
            let labels = expand_labels(annotation, len)?;
            let target = one_hot_encode(&labels, arch.num_states)?;
            Ok(Prepared {
                input: normalizer.apply(&s.series)?.values().to_owned(),
                target,
                labels: labels.states,
            })
        })
        .collect()
}

/// Masked timestep accuracy pooled over all samples.
fn accuracy(net: &Network, data: &[Prepared]) -> Result<f64> {
    let results: Vec<Result<(usize, usize)>> = data
        .par_iter()
        .map(|p| {
            let pass = net.forward(p.input.view())?;
            let pred = argmax_rows(pass.probs.view());
            let hits = pred.iter().zip(&p.labels).filter(|(a, b)| a == b).count();
            Ok((hits, p.labels.len()))
        })
        .collect();
    let (mut hits, mut total) = (0, 0);
    for r in results {
        let (h, t) = r?;
        hits += h;
        total += t;
    }
    Ok(hits as f64 / total.max(1) as f64)
}

fn clip(grads: &mut [ArrayD<f64>], max_norm: f64) {
    let norm = grads.iter().flat_map(|g| g.iter()).map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads {
            g.mapv_inplace(|v| v * scale);
        }
    }
}

/// Trains on the dataset's train split with early stopping on the validation
/// split. The normalizer is fitted on the train split.
pub fn train(
    dataset: &Dataset,
    arch: &ArchitectureConfig,
    config: &TrainingConfig,
) -> Result<(ModelCheckpoint, TrainingHistory)> {
    let train: Vec<&Sample> = dataset.in_split(Split::Train).collect();
    let val: Vec<&Sample> = dataset.in_split(Split::Validation).collect();
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let normalizer = dataset.fit_normalizer()?;
    let (mut ckpt, history) = train_samples(&train, &val, normalizer, arch, config)?;
    ckpt.metadata.state_names = dataset.state_names.clone();
    ckpt.metadata.channel_names = dataset.channel_names.clone();
    ckpt.metadata.sample_rate_hz = dataset.sample_rate_hz;
    Ok((ckpt, history))
}

/// Training loop over explicit train and validation sets.
///
/// Each epoch shuffles the training samples, runs Adam on mini-batches of
/// mean per-sample dice loss and records the mean training loss and the
/// validation accuracy. Training stops after `max_epochs` or once validation
/// accuracy has not improved for `patience` epochs; the parameters of the
/// best validation epoch are returned.
pub fn train_samples(
    train: &[&Sample],
    validation: &[&Sample],
    normalizer: Normalizer,
    arch: &ArchitectureConfig,
    config: &TrainingConfig,
) -> Result<(ModelCheckpoint, TrainingHistory)> {
    config.validate()?;
    arch.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let train_data = prepare(train, &normalizer, arch)?;
    let val_data = prepare(validation, &normalizer, arch)?;

    let mut net = Network::new(arch.clone(), config.seed)?;
    let mut adam = Adam::new(
        net.parameters(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut history = TrainingHistory::default();
    let mut best = (f64::NEG_INFINITY, 0usize, net.clone());
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results: Vec<Result<(f64, Array2<f64>, Vec<ArrayD<f64>>)>> = batch
                .par_iter()
                .map(|&i| net.loss_and_gradients(train_data[i].input.view(), train_data[i].target.view()))
                .collect();
            let mut total: Option<Vec<ArrayD<f64>>> = None;
            for r in results {
                let (loss, _, grads) = r?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                loss_sum += loss;
                match total.as_mut() {
                    None => total = Some(grads),
                    Some(acc) => acc.iter_mut().zip(&grads).for_each(|(a, g)| *a += g),
                }
            }
            let mut grads = total.expect("non-empty batch");
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.mapv_inplace(|v| v * scale));
            if let Some(max_norm) = config.clip_norm {
                clip(&mut grads, max_norm);
            }
            adam.update(net.parameters_mut(), &grads);
        }
        let train_loss = loss_sum / train_data.len() as f64;
        if !train_loss.is_finite() || net.parameters().iter().any(|t| t.value.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { epoch });
        }
        let val_accuracy = accuracy(&net, &val_data)?;
        log::info!("epoch {epoch}: train_loss {train_loss:.5} val_accuracy {val_accuracy:.4}");
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_accuracy,
        });
        if val_accuracy > best.0 {
            best = (val_accuracy, epoch, net.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                log::info!("early stop at epoch {epoch}, best epoch {}", best.1);
                break;
            }
        }
    }

    let (best_val, best_epoch, net) = best;
    let last = history.epochs.last().expect("at least one epoch");
    let metadata = TrainingMetadata {
        epochs_run: last.epoch,
        best_epoch,
        final_train_loss: last.train_loss,
        best_val_accuracy: best_val,
        seed: config.seed,
        training: config.clone(),
        state_names: Vec::new(),
        channel_names: Vec::new(),
        sample_rate_hz: 0.0,
    };
    Ok((ModelCheckpoint::new(net, normalizer, metadata)?, history))
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::data::{MultivariateSeries, StateAnnotation, ChangePoint};
    use crate::nn::config::{ConvSpec, Variant};

    /// Three states, each with its own channel offsets, plus noise.
    fn toy_sample(id: usize, split: Split) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(id as u64);
        let len = 60;
        let cuts = [0, rng.gen_range(10..25), rng.gen_range(30..50)];
        let states = [0usize, 1, 2];
        let mut labels = vec![0; len];
        for (i, &c) in cuts.iter().enumerate() {
            for l in labels.iter_mut().skip(c) {
                *l = states[i];
            }
        }
        let a: Vec<f64> = labels.iter().map(|&s| s as f64 + rng.gen_range(-0.2..0.2)).collect();
        let b: Vec<f64> = labels.iter().map(|&s| (s == 1) as u8 as f64 + rng.gen_range(-0.2..0.2)).collect();
        let series = MultivariateSeries::from_channels(&[a, b], 5.0, vec!["a".into(), "b".into()]).unwrap();
        let entries = cuts.iter().zip(states).map(|(&t, s)| ChangePoint::new(t, s)).collect();
        Sample {
            id: format!("toy{id}"),
            series,
            annotation: Some(StateAnnotation::new(entries, 3).unwrap()),
            split: Some(split),
        }
    }

    fn toy_dataset() -> Dataset {
        let samples = (0..8)
            .map(|i| toy_sample(i, if i < 6 { Split::Train } else { Split::Validation }))
            .collect();
        Dataset {
            samples,
            state_names: vec!["x".into(), "y".into(), "z".into()],
            channel_names: vec!["a".into(), "b".into()],
            sample_rate_hz: 5.0,
        }
    }

    fn arch() -> ArchitectureConfig {
        ArchitectureConfig {
            variant: Variant::Hybrid,
            conv_layers: vec![ConvSpec::new(4, 3)],
            gru_layers: vec![6],
            dense_hidden: 8,
            leaky_alpha: 0.3,
            num_states: 3,
            input_channels: 2,
            max_length: 64,
        }
    }

    fn config(epochs: usize) -> TrainingConfig {
        TrainingConfig {
            max_epochs: epochs,
            patience: epochs,
            learning_rate: 1e-2,
            batch_size: 2,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn loss_decreases() {
        let (_, history) = train(&toy_dataset(), &arch(), &config(5)).unwrap();
        assert_eq!(history.epochs.len(), 5);
        assert!(history.epochs[4].train_loss < history.epochs[0].train_loss);
    }

    #[test]
    fn deterministic() {
        let ds = toy_dataset();
        let (a, ha) = train(&ds, &arch(), &config(3)).unwrap();
        let (b, hb) = train(&ds, &arch(), &config(3)).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    }

    #[test]
    fn returns_best_epoch() {
        let (ckpt, history) = train(&toy_dataset(), &arch(), &config(6)).unwrap();
        let best = history
            .epochs
            .iter()
            .map(|r| r.val_accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(ckpt.metadata.best_val_accuracy, best);
        assert_eq!(history.epochs[ckpt.metadata.best_epoch - 1].val_accuracy, best);
    }

    #[test]
    fn early_stopping() {
        let mut cfg = config(50);
        cfg.patience = 1;
        cfg.learning_rate = 1e-9;
        let (_, history) = train(&toy_dataset(), &arch(), &cfg).unwrap();
        assert!(history.epochs.len() < 50);
    }

    #[test]
    fn history_csv() {
        let h = TrainingHistory {
            epochs: vec![EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                val_accuracy: 0.25,
            }],
        };
        assert_eq!(h.to_csv(), "epoch,train_loss,val_accuracy\n1,0.5,0.25\n");
    }

    #[test]
    fn empty_splits() {
        let mut ds = toy_dataset();
        ds.samples.iter_mut().for_each(|s| s.split = Some(Split::Test));
        assert!(matches!(train(&ds, &arch(), &config(1)), Err(Error::EmptyTrainingSet)));
    }
}
