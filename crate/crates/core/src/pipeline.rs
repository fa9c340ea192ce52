//! End-to-end steps shared by the command line, the examples and the
//! acceptance suite: predictions from every method in the common record
//! format, and the baseline sweeps.

use rayon::prelude::*;

use crate::baseline::{ridge_fit, ridge_predict, window_features, window_matrix, RidgeModel, WindowedFeatures};
use crate::cpd::{detect, CpdConfig};
use crate::data::{derive_change_points, expand_labels, LabelSequence, Normalizer, Sample};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalConfig, EvaluationReport, PredictionRecord};
use crate::nn::ModelCheckpoint;

fn change_times(labels: &LabelSequence, eval_start: usize) -> Vec<usize> {
    let mask: Vec<bool> = (0..labels.len()).map(|t| t >= eval_start).collect();
    derive_change_points(labels, &mask).into_iter().map(|c| c.t).collect()
}

/// Labels and derived change points from a trained network.
pub fn nn_predictions(checkpoint: &ModelCheckpoint, samples: &[&Sample]) -> Result<Vec<PredictionRecord>> {
    samples
        .par_iter()
        .map(|s| {
            let p = checkpoint.predict(&s.series)?;
            Ok(PredictionRecord {
                id: s.id.clone(),
                change_points: change_times(&p.labels, 0),
                labels: Some(p.labels.states),
                eval_start: 0,
            })
        })
        .collect()
}

/// Breakpoints of one detector on normalized signals.
pub fn cpd_predictions(
    samples: &[&Sample],
    normalizer: &Normalizer,
    config: &CpdConfig,
) -> Result<Vec<PredictionRecord>> {
    samples
        .par_iter()
        .map(|s| {
            let signal = normalizer.apply(&s.series)?;
            let seg = detect(signal.values(), config)?;
            Ok(PredictionRecord {
                id: s.id.clone(),
                labels: None,
                change_points: seg.breakpoints,
                eval_start: 0,
            })
        })
        .collect()
}

/// Evaluates every detector in `grid`; results keep the grid order.
pub fn cpd_grid_search(
    samples: &[&Sample],
    normalizer: &Normalizer,
    grid: &[CpdConfig],
    num_states: usize,
    eval: &EvalConfig,
) -> Result<Vec<(CpdConfig, EvaluationReport)>> {
    grid.iter()
        .map(|cfg| {
            let preds = cpd_predictions(samples, normalizer, cfg)?;
            let report = evaluate(samples, &preds, num_states, eval)?;
            log::info!(
                "{}: F1 {:.4} at the first tolerance",
                cfg.label(),
                report.aggregate.cpd.first().map_or(0.0, |c| c.prf.f1)
            );
            Ok((cfg.clone(), report))
        })
        .collect()
}

/// Stacked window features of the annotated samples, after normalization.
pub fn windowed_training_set(samples: &[&Sample], normalizer: &Normalizer, width: usize) -> Result<WindowedFeatures> {
    let parts = samples
        .par_iter()
        .filter(|s| s.series.len() >= width)
        .map(|s| {
            let annotation = s
                .annotation
                .as_ref()
                .ok_or_else(|| Error::InvalidAnnotation(format!("sample {} has no labels", s.id)))?;
            let labels = expand_labels(annotation, s.series.len())?;
            window_features(&normalizer.apply(&s.series)?, &labels, width)
        })
        .collect::<Result<Vec<_>>>()?;
    WindowedFeatures::stack(&parts)
}

pub fn fit_ridge_baseline(
    train: &[&Sample],
    normalizer: &Normalizer,
    width: usize,
    alpha_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<RidgeModel> {
    let features = windowed_training_set(train, normalizer, width)?;
    ridge_fit(&features, alpha_grid, folds, seed)
}

/// Per-timestep ridge labels. The first `w - 1` steps have no full window;
/// they copy the first prediction and are excluded through `eval_start`.
pub fn ridge_predictions(
    model: &RidgeModel,
    samples: &[&Sample],
    normalizer: &Normalizer,
) -> Result<Vec<PredictionRecord>> {
    let w = model.width;
    samples
        .par_iter()
        .map(|s| {
            let matrix = window_matrix(&normalizer.apply(&s.series)?, w)?;
            let pred = ridge_predict(model, matrix.view())?;
            let mut labels = vec![pred[0]; w - 1];
            labels.extend(pred);
            let labels = LabelSequence::new(labels);
            Ok(PredictionRecord {
                id: s.id.clone(),
                change_points: change_times(&labels, w - 1),
                labels: Some(labels.states),
                eval_start: w - 1,
            })
        })
        .collect()
}
