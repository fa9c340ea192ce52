//! Tolerance-margin change point scores, macro classification scores and state strips.

mod classification;
mod cpd;
mod report;
mod strip;

pub use classification::{macro_prf, ClassCounts, ClassInclusion, ClassScore, ClassificationScores};
pub use cpd::{
    cpd_confusion, cpd_confusion_matched, cpd_confusion_times, cpd_prf, harmonic, tau_to_samples, CpdConfusion, Prf,
    DEFAULT_TAUS,
};
pub use report::{
    evaluate, read_predictions, write_predictions, AggregateScores, CpdScore, EvalConfig, EvaluationReport,
    FlightScores, Matching, PredictionRecord,
};
pub use strip::{render_breakpoint_strip, render_state_strip, state_color, state_runs, Run, DEFAULT_STRIP_SAMPLES};
