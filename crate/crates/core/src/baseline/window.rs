use ndarray::{concatenate, Array2, Axis};

use crate::data::{LabelSequence, MultivariateSeries};
use crate::error::{Error, Result};

/// Window widths compared in the baseline grid.
pub const DEFAULT_WIDTHS: [usize; 5] = [3, 5, 10, 15, 20];

/// Flattened sliding windows, one row per timestep `t >= w - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedFeatures {
    pub matrix: Array2<f64>,
    pub labels: Vec<usize>,
    pub width: usize,
}

impl WindowedFeatures {
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Stacks the rows of several flights.
    pub fn stack(parts: &[WindowedFeatures]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyDataset)?;
        if let Some(bad) = parts.iter().find(|p| p.matrix.ncols() != first.matrix.ncols()) {
            return Err(Error::WidthMismatch {
                expected: first.matrix.ncols(),
                found: bad.matrix.ncols(),
            });
        }
        let views: Vec<_> = parts.iter().map(|p| p.matrix.view()).collect();
        Ok(Self {
            matrix: concatenate(Axis(0), &views).map_err(|e| Error::ShapeMismatch(e.to_string()))?,
            labels: parts.iter().flat_map(|p| p.labels.iter().copied()).collect(),
            width: first.width,
        })
    }
}

/// Rows `[x[t-w+1, ..], ..., x[t, ..]]` for every `t >= w - 1`.
pub fn window_matrix(series: &MultivariateSeries, width: usize) -> Result<Array2<f64>> {
    let (len, n) = (series.len(), series.num_channels());
    if width == 0 || len < width {
        return Err(Error::SeriesShorterThanWindow { length: len, width });
    }
    let values = series.values();
    let flat = values.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    let rows = len - width + 1;
    let mut out = Array2::zeros((rows, n * width));
    for (r, mut row) in out.rows_mut().into_iter().enumerate() {
        row.as_slice_mut()
            .unwrap()
            .copy_from_slice(&flat[r * n..(r + width) * n]);
    }
    Ok(out)
}

/// Window rows labeled with the state at the window's last timestep.
pub fn window_features(series: &MultivariateSeries, labels: &LabelSequence, width: usize) -> Result<WindowedFeatures> {
    if labels.len() != series.len() {
        return Err(Error::LengthMismatch {
            left: series.len(),
            right: labels.len(),
        });
    }
    Ok(WindowedFeatures {
        matrix: window_matrix(series, width)?,
        labels: labels.states[width - 1..].to_vec(),
        width,
    })
}
