use serde::{Deserialize, Serialize};

use super::series::MultivariateSeries;
use crate::error::{Error, Result};

/// Per-channel affine standardization fitted on training samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Fits population mean and standard deviation over the concatenation of
    /// `samples`. Zero-variance channels get `std = 1`.
    pub fn fit<'a, I>(samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a MultivariateSeries>,
    {
        let mut count = 0usize;
        let mut mean: Vec<f64> = Vec::new();
        let mut m2: Vec<f64> = Vec::new();
        // Welford, channel-wise.
        for series in samples {
            if mean.is_empty() {
                mean = vec![0.0; series.num_channels()];
                m2 = vec![0.0; series.num_channels()];
            } else if mean.len() != series.num_channels() {
                return Err(Error::ChannelMismatch {
                    expected: mean.len(),
                    found: series.num_channels(),
                });
            }
            for row in series.values().rows() {
                count += 1;
                for (i, &x) in row.iter().enumerate() {
                    let delta = x - mean[i];
                    mean[i] += delta / count as f64;
                    m2[i] += delta * (x - mean[i]);
                }
            }
        }
        if count == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let std = m2
            .iter()
            .map(|&v| {
                let s = (v / count as f64).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn num_channels(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.check(series)?;
        let mut values = series.values().to_owned();
        for (i, mut col) in values.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| (x - self.mean[i]) / self.std[i]);
        }
        Ok(series.with_values(values))
    }

    pub fn invert(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.check(series)?;
        let mut values = series.values().to_owned();
        for (i, mut col) in values.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| x * self.std[i] + self.mean[i]);
        }
        Ok(series.with_values(values))
    }

    fn check(&self, series: &MultivariateSeries) -> Result<()> {
        if series.num_channels() != self.num_channels() {
            return Err(Error::ChannelMismatch {
                expected: self.num_channels(),
                found: series.num_channels(),
            });
        }
        Ok(())
    }
}
