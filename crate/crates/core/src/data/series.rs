use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One execution's I/O recording: `n` aligned channels sampled at a fixed rate.
///
/// Values are stored time-major, one row per sample and one column per channel,
/// so all channels trivially share the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    values: Array2<f64>,
    sample_rate_hz: f64,
    channel_names: Vec<String>,
}

impl MultivariateSeries {
    pub fn new(values: Array2<f64>, sample_rate_hz: f64, channel_names: Vec<String>) -> Result<Self> {
        let (len, n) = values.dim();
        if n < 2 {
            return Err(Error::InvalidSeries(format!("need at least 2 channels, got {n}")));
        }
        if len < 1 {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if channel_names.len() != n {
            return Err(Error::InvalidSeries(format!(
                "{} channel names for {n} channels",
                channel_names.len()
            )));
        }
        Ok(Self {
            values,
            sample_rate_hz,
            channel_names,
        })
    }

    /// Builds a series from per-channel vectors, which must all have the same length.
    pub fn from_channels(
        channels: &[Vec<f64>],
        sample_rate_hz: f64,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        let len = channels.first().map_or(0, Vec::len);
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::InvalidSeries(format!(
                "channel lengths differ: {len} vs {}",
                bad.len()
            )));
        }
        let values = Array2::from_shape_fn((len, channels.len()), |(t, i)| channels[i][t]);
        Self::new(values, sample_rate_hz, channel_names)
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn num_channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn channel(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.column(i)
    }

    pub(crate) fn with_values(&self, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), self.values.dim());
        Self {
            values,
            sample_rate_hz: self.sample_rate_hz,
            channel_names: self.channel_names.clone(),
        }
    }
}

/// A single `(timestamp, state)` entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChangePoint {
    pub t: usize,
    pub state: usize,
}

impl ChangePoint {
    pub fn new(t: usize, state: usize) -> Self {
        Self { t, state }
    }
}

/// Ordered list of state entries; the first entry records the initial state at `t = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAnnotation {
    entries: Vec<ChangePoint>,
    num_states: usize,
}

impl StateAnnotation {
    pub fn new(entries: Vec<ChangePoint>, num_states: usize) -> Result<Self> {
        let first = entries.first().ok_or(Error::EmptyAnnotation)?;
        if first.t != 0 {
            return Err(Error::InvalidAnnotation(format!(
                "first entry must be at t = 0, found t = {}",
                first.t
            )));
        }
        for cp in &entries {
            if cp.state >= num_states {
                return Err(Error::StateOutOfRange {
                    state: cp.state,
                    num_states,
                });
            }
        }
        for pair in entries.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::InvalidAnnotation(format!(
                    "timestamps not strictly increasing at t = {}",
                    pair[1].t
                )));
            }
            if pair[1].state == pair[0].state {
                return Err(Error::InvalidAnnotation(format!(
                    "repeated state {} at t = {}",
                    pair[1].state, pair[1].t
                )));
            }
        }
        Ok(Self {
            entries,
            num_states,
        })
    }

    pub fn entries(&self) -> &[ChangePoint] {
        &self.entries
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Entries after the initial one, i.e. the actual state changes.
    pub fn change_points(&self) -> &[ChangePoint] {
        &self.entries[1..]
    }

    pub fn change_times(&self) -> Vec<usize> {
        self.change_points().iter().map(|cp| cp.t).collect()
    }

    pub fn last_timestamp(&self) -> usize {
        self.entries.last().map_or(0, |cp| cp.t)
    }

    /// Checks that every timestamp fits a series of `length` samples.
    pub fn check_length(&self, length: usize) -> Result<()> {
        let last = self.last_timestamp();
        if last >= length {
            return Err(Error::TimestampOutOfRange {
                timestamp: last,
                length,
            });
        }
        Ok(())
    }

    /// Builds the annotation of a dense label sequence, keeping the initial state.
    pub fn from_labels(labels: &[usize], num_states: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (t, &s) in labels.iter().enumerate() {
            if entries.last().map_or(true, |cp: &ChangePoint| cp.state != s) {
                entries.push(ChangePoint::new(t, s));
            }
        }
        Self::new(entries, num_states)
    }
}

/// A fixed-length padded copy of a series plus its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    pub data: Array2<f64>,
    pub mask: Vec<bool>,
    pub original_length: usize,
}

impl PaddedBatch {
    pub fn target_length(&self) -> usize {
        self.mask.len()
    }

    /// The unpadded rows.
    pub fn valid(&self) -> ArrayView2<'_, f64> {
        self.data.slice(ndarray::s![..self.original_length, ..])
    }
}

/// Dense per-timestep state ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSequence {
    pub states: Vec<usize>,
}

impl LabelSequence {
    pub fn new(states: Vec<usize>) -> Self {
        Self { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self::new(self.states[..len.min(self.states.len())].to_vec())
    }
}
