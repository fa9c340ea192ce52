use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::normalize::Normalizer;
use super::series::{MultivariateSeries, StateAnnotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

/// One recorded execution with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub series: MultivariateSeries,
    pub annotation: Option<StateAnnotation>,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.9,
            validation: 0.05,
            test: 0.05,
        }
    }
}

impl SplitFractions {
    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.as_array();
        if f.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidFractions(format!("fractions must be positive: {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidFractions(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Per-split sample counts by largest-remainder rounding. Equal remainders
/// favour the later split.
pub fn split_counts(n: usize, fractions: &SplitFractions) -> Result<[usize; 3]> {
    fractions.validate()?;
    let quotas = fractions.as_array().map(|f| f * n as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.cmp(&a))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// Inclusive series length bounds applied when loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBounds {
    pub min: usize,
    pub max: usize,
}

impl Default for LengthBounds {
    fn default() -> Self {
        Self { min: 200, max: 20_000 }
    }
}

impl LengthBounds {
    pub fn contains(&self, len: usize) -> bool {
        (self.min..=self.max).contains(&len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// State id `i` is named `state_names[i]`.
    pub state_names: Vec<String>,
    pub channel_names: Vec<String>,
    pub sample_rate_hz: f64,
}

impl Dataset {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &Sample> + '_ {
        self.samples.iter().filter(move |s| s.split == Some(split))
    }

    pub fn max_length(&self) -> usize {
        self.samples.iter().map(|s| s.series.len()).max().unwrap_or(0)
    }

    /// Drops samples outside `bounds`, logging a warning for each one.
    pub fn retain_lengths(mut self, bounds: LengthBounds) -> Result<Self> {
        self.samples.retain(|s| {
            let keep = bounds.contains(s.series.len());
            if !keep {
                log::warn!(
                    "dropping {}: length {} outside [{}, {}]",
                    s.id,
                    s.series.len(),
                    bounds.min,
                    bounds.max
                );
            }
            keep
        });
        if self.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self)
    }

    /// Assigns every sample to exactly one split, deterministically from `seed`.
    pub fn split(mut self, fractions: &SplitFractions, seed: u64) -> Result<Self> {
        if self.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let [train, validation, _] = split_counts(self.samples.len(), fractions)?;
        let mut order: Vec<usize> = (0..self.samples.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for (rank, &idx) in order.iter().enumerate() {
            self.samples[idx].split = Some(if rank < train {
                Split::Train
            } else if rank < train + validation {
                Split::Validation
            } else {
                Split::Test
            });
        }
        Ok(self)
    }

    /// Normalization statistics from the training split only.
    pub fn fit_normalizer(&self) -> Result<Normalizer> {
        Normalizer::fit(self.in_split(Split::Train).map(|s| &s.series))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: usize, len: usize, value: f64) -> Sample {
        let series = MultivariateSeries::from_channels(
            &[vec![value; len], (0..len).map(|t| t as f64).collect()],
            5.0,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        Sample {
            id: format!("f{id:04}"),
            series,
            annotation: None,
            split: None,
        }
    }

    fn dataset(samples: Vec<Sample>) -> Dataset {
        Dataset {
            samples,
            state_names: vec!["s0".into()],
            channel_names: vec!["a".into(), "b".into()],
            sample_rate_hz: 5.0,
        }
    }

    #[test]
    fn largest_remainder_counts() {
        assert_eq!(split_counts(888, &SplitFractions::default()).unwrap(), [799, 44, 45]);
        assert_eq!(split_counts(200, &SplitFractions::default()).unwrap(), [180, 10, 10]);
        assert_eq!(split_counts(1, &SplitFractions::default()).unwrap(), [1, 0, 0]);
        let bad = SplitFractions {
            train: 0.5,
            validation: 0.5,
            test: 0.5,
        };
        assert!(split_counts(10, &bad).is_err());
    }

    #[test]
    fn length_filter_matches_reported_retention() {
        let mut samples = Vec::new();
        for i in 0..888 {
            samples.push(sample(i, 200 + i % 50, 0.0));
        }
        for i in 0..30 {
            samples.push(sample(1000 + i, 199 - i, 0.0));
        }
        for i in 0..30 {
            samples.push(sample(2000 + i, 20_001 + i, 0.0));
        }
        assert_eq!(samples.len(), 948);
        let kept = dataset(samples).retain_lengths(LengthBounds::default()).unwrap();
        assert_eq!(kept.len(), 888);
    }

    #[test]
    fn split_is_deterministic_partition() {
        let ds = dataset((0..40).map(|i| sample(i, 5, i as f64)).collect());
        let a = ds.clone().split(&SplitFractions::default(), 3).unwrap();
        let b = ds.split(&SplitFractions::default(), 3).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.iter().all(|s| s.split.is_some()));
        let counts: Vec<usize> = Split::ALL.iter().map(|&s| a.in_split(s).count()).collect();
        assert_eq!(counts, vec![36, 2, 2]);
    }

    #[test]
    fn normalizer_ignores_non_training_samples() {
        let ds = dataset((0..20).map(|i| sample(i, 5, i as f64)).collect())
            .split(&SplitFractions::default(), 11)
            .unwrap();
        let base = ds.fit_normalizer().unwrap();
        let mut perturbed = ds.clone();
        for s in perturbed.samples.iter_mut().filter(|s| s.split != Some(Split::Train)) {
            *s = Sample {
                split: s.split,
                ..sample(99, 7, 1e6)
            };
        }
        let non_train: Vec<usize> = (0..perturbed.len())
            .filter(|&i| perturbed.samples[i].split != Some(Split::Train))
            .collect();
        if let [first, .., last] = non_train[..] {
            perturbed.samples.swap(first, last);
        }
        assert_eq!(perturbed.fit_normalizer().unwrap(), base);
    }

    #[test]
    fn empty_dataset_errors() {
        assert!(matches!(
            dataset(vec![]).split(&SplitFractions::default(), 0),
            Err(Error::EmptyDataset)
        ));
    }
}
