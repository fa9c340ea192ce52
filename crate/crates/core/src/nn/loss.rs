use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Smoothing term of the soft dice coefficient.
pub const DICE_SMOOTH: f64 = 1.0;

/// Masked multi-class soft dice loss and its gradient with respect to `pred`.
///
/// The loss is one minus the mean soft dice coefficient over the classes that
/// occur in the unmasked target. Masked rows contribute nothing.
pub fn dice_loss(
    pred: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    mask: &[bool],
) -> Result<(f64, Array2<f64>)> {
    let (len, classes) = pred.dim();
    if target.dim() != (len, classes) || mask.len() != len {
        return Err(Error::ShapeMismatch(format!(
            "dice: pred {:?}, target {:?}, mask {}",
            pred.dim(),
            target.dim(),
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::AllMasked);
    }
    let mut inter = vec![0.0; classes];
    let mut p_sum = vec![0.0; classes];
    let mut g_sum = vec![0.0; classes];
    for t in (0..len).filter(|&t| mask[t]) {
        for c in 0..classes {
            let (p, g) = (pred[[t, c]], target[[t, c]]);
            inter[c] += p * g;
            p_sum[c] += p;
            g_sum[c] += g;
        }
    }
    let present: Vec<usize> = (0..classes).filter(|&c| g_sum[c] > 0.0).collect();
    let k = present.len() as f64;
    let mut loss = 1.0;
    let mut grad = Array2::zeros((len, classes));
    for &c in &present {
        let num = 2.0 * inter[c] + DICE_SMOOTH;
        let den = p_sum[c] + g_sum[c] + DICE_SMOOTH;
        loss -= num / den / k;
        for t in (0..len).filter(|&t| mask[t]) {
            grad[[t, c]] = -(2.0 * target[[t, c]] * den - num) / (den * den) / k;
        }
    }
    Ok((loss, grad))
}
