use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::cost::{FittedCost, SegmentCostModel};
use crate::error::{Error, Result};

/// Breakpoints of a penalized segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    /// Sorted interior indices; each starts a new segment.
    pub breakpoints: Vec<usize>,
    pub total_cost: f64,
    /// `total_cost + penalty * breakpoints.len()`.
    pub objective: f64,
}

impl SegmentationResult {
    fn build(cost: &FittedCost<'_>, breakpoints: Vec<usize>, penalty: f64) -> Self {
        let total_cost = total_cost(cost, &breakpoints);
        Self {
            objective: total_cost + penalty * breakpoints.len() as f64,
            breakpoints,
            total_cost,
        }
    }
}

/// Sum of segment costs for the segmentation induced by `breakpoints`.
pub fn total_cost(cost: &FittedCost<'_>, breakpoints: &[usize]) -> f64 {
    let mut bounds = Vec::with_capacity(breakpoints.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(breakpoints);
    bounds.push(cost.len());
    bounds.windows(2).map(|w| cost.cost_unchecked(w[0], w[1])).sum()
}

/// Initial bottom-up grid: multiples of `jump` (coarsened to respect
/// `min_size`) leaving at least `min_size` samples on each side.
pub fn bottom_up_grid(len: usize, jump: usize, min_size: usize) -> Vec<usize> {
    let jump = jump.max(1);
    let step = jump * min_size.max(1).div_ceil(jump);
    (1..)
        .map(|k| k * step)
        .take_while(|&b| b < len)
        .filter(|&b| b >= min_size && len - b >= min_size)
        .collect()
}

/// Greedy bottom-up merging.
///
/// Starts from a breakpoint every `jump` samples and repeatedly removes the
/// breakpoint whose removal increases the total cost least, as long as that
/// increase is below `penalty`. Ties go to the smallest breakpoint.
pub fn bottom_up(
    signal: ArrayView2<'_, f64>,
    model: &SegmentCostModel,
    penalty: f64,
    jump: usize,
    min_size: usize,
) -> Result<SegmentationResult> {
    check_penalty(penalty)?;
    let cost = model.fit(signal)?;
    let min_size = min_size.max(cost.min_size());
    let len = signal.nrows();
    if len < 2 * min_size {
        return Err(Error::SignalTooShort {
            length: len,
            required: 2 * min_size,
        });
    }
    let mut bounds = vec![0];
    bounds.extend(bottom_up_grid(len, jump, min_size));
    bounds.push(len);

    // seg[i] is the cost of [bounds[i], bounds[i + 1]); gain[i] the cost
    // increase of removing bounds[i + 1].
    let mut seg: Vec<f64> = bounds
        .windows(2)
        .map(|w| cost.cost_unchecked(w[0], w[1]))
        .collect();
    let merge_gain = |bounds: &[usize], seg: &[f64], i: usize| {
        cost.cost_unchecked(bounds[i], bounds[i + 2]) - seg[i] - seg[i + 1]
    };
    let mut gain: Vec<f64> = (0..seg.len().saturating_sub(1))
        .map(|i| merge_gain(&bounds, &seg, i))
        .collect();

    while !gain.is_empty() {
        let (best, &g) = gain
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("non-empty");
        if !(g < penalty) {
            break;
        }
        seg[best] += seg[best + 1] + g;
        seg.remove(best + 1);
        bounds.remove(best + 1);
        gain.remove(best);
        if best > 0 {
            gain[best - 1] = merge_gain(&bounds, &seg, best - 1);
        }
        if best < gain.len() {
            gain[best] = merge_gain(&bounds, &seg, best);
        }
    }
    let breakpoints = bounds[1..bounds.len() - 1].to_vec();
    Ok(SegmentationResult::build(&cost, breakpoints, penalty))
}

/// Discrepancy `cost(t-h, t+h) - cost(t-h, t) - cost(t, t+h)` for every
/// centre `t` in `[h, len - h]`, where `h = width / 2`.
pub fn window_discrepancy(cost: &FittedCost<'_>, width: usize) -> Vec<(usize, f64)> {
    let half = width / 2;
    let len = cost.len();
    if len < width {
        return Vec::new();
    }
    (half..=len - half)
        .map(|t| {
            let d = cost.cost_unchecked(t - half, t + half)
                - cost.cost_unchecked(t - half, t)
                - cost.cost_unchecked(t, t + half);
            (t, d)
        })
        .collect()
}

/// Sliding-window search. Peaks of the discrepancy above `penalty` are
/// reported after non-maximum suppression within `width / 2` samples.
pub fn window_based(
    signal: ArrayView2<'_, f64>,
    model: &SegmentCostModel,
    penalty: f64,
    width: usize,
) -> Result<SegmentationResult> {
    check_penalty(penalty)?;
    let len = signal.nrows();
    if len < width {
        return Err(Error::SignalShorterThanWindow { length: len, width });
    }
    let cost = model.fit(signal)?;
    if width % 2 != 0 || width < 2 * cost.min_size() {
        return Err(Error::InvalidConfig(format!(
            "window width must be even and at least {}, got {width}",
            2 * cost.min_size()
        )));
    }
    let half = width / 2;
    let mut candidates: Vec<(usize, f64)> = window_discrepancy(&cost, width)
        .into_iter()
        .filter(|&(t, d)| d > penalty && t > 0 && t < len)
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut picked: Vec<usize> = Vec::new();
    for (t, _) in candidates {
        if picked.iter().all(|&p| p.abs_diff(t) > half) {
            picked.push(t);
        }
    }
    picked.sort_unstable();
    Ok(SegmentationResult::build(&cost, picked, penalty))
}

fn check_penalty(penalty: f64) -> Result<()> {
    if penalty.is_nan() || penalty < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "penalty must be non-negative, got {penalty}"
        )));
    }
    Ok(())
}
