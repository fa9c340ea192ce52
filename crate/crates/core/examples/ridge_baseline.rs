//! Sliding-window ridge classifier over the usual window widths.

use stateinfer::baseline::{default_alpha_grid, DEFAULT_FOLDS, DEFAULT_WIDTHS};
use stateinfer::data::{Sample, Split, SplitFractions};
use stateinfer::metrics::{evaluate, EvalConfig};
use stateinfer::pipeline::{fit_ridge_baseline, ridge_predictions};
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn main() -> stateinfer::Result<()> {
    let ds = generate_dataset(60, &SimConfig::default(), &Profile::Desk.plan_profile(), 1)?
        .split(&SplitFractions::default(), 0)?;
    let norm = ds.fit_normalizer()?;
    let train: Vec<&Sample> = ds.in_split(Split::Train).collect();
    let test: Vec<&Sample> = ds.in_split(Split::Test).collect();

    for w in DEFAULT_WIDTHS {
        let model = fit_ridge_baseline(&train, &norm, w, &default_alpha_grid(), DEFAULT_FOLDS, 0)?;
        let report = evaluate(&test, &ridge_predictions(&model, &test, &norm)?, ds.num_states(), &EvalConfig::default())?;
        let cls = report.aggregate.classification.unwrap();
        println!(
            "w={w:<2} alpha={:<6e} macro F1 {:.3}  accuracy {:.3}  CPD F1@1s {:.3}",
            model.chosen_alpha, cls.f1, cls.accuracy, report.aggregate.cpd[0].prf.f1
        );
    }
    Ok(())
}
