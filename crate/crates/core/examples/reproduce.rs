//! Directional reproduction on synthetic flights: the detector sweep, the ridge
//! baseline and the three network variants on one test split.
//!
//! cargo run --release --example reproduce -- [flights] [max_epochs]
//! With 200 flights and 80 epochs this takes roughly ten minutes on one core.

use std::time::Instant;

use stateinfer::baseline::{default_alpha_grid, DEFAULT_FOLDS, DEFAULT_WIDTHS};
use stateinfer::cpd::config_grid;
use stateinfer::data::{Sample, Split, SplitFractions};
use stateinfer::metrics::{evaluate, EvalConfig, EvaluationReport};
use stateinfer::nn::{train, ArchitectureConfig, Preset, TrainingConfig, Variant};
use stateinfer::pipeline::{cpd_grid_search, fit_ridge_baseline, nn_predictions, ridge_predictions};
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn line(name: &str, r: &EvaluationReport) {
    let cpd: Vec<String> = r.aggregate.cpd.iter().map(|c| format!("{:6.2}", 100.0 * c.prf.f1)).collect();
    let cls = r
        .aggregate
        .classification
        .as_ref()
        .map_or("     -".into(), |c| format!("{:6.2}", 100.0 * c.f1));
    println!("{name:<36} {}  {cls}", cpd.join(" "));
}

fn main() -> stateinfer::Result<()> {
    let mut args = std::env::args().skip(1);
    let flights: usize = args.next().map_or(200, |a| a.parse().expect("flight count"));
    let epochs: usize = args.next().map_or(80, |a| a.parse().expect("epoch count"));

    let ds = generate_dataset(flights, &SimConfig::default(), &Profile::Desk.plan_profile(), 1)?
        .split(&SplitFractions::default(), 0)?;
    let norm = ds.fit_normalizer()?;
    let train_set: Vec<&Sample> = ds.in_split(Split::Train).collect();
    let test: Vec<&Sample> = ds.in_split(Split::Test).collect();
    let eval = EvalConfig::default();
    println!("{:<36} {:>6} {:>6} {:>6}  {:>6}", "method", "F1@1s", "F1@3s", "F1@5s", "macro");

    let grid = cpd_grid_search(&test, &norm, &config_grid(), ds.num_states(), &eval)?;
    let (cfg, best) = grid
        .iter()
        .max_by(|a, b| a.1.aggregate.cpd[0].prf.f1.total_cmp(&b.1.aggregate.cpd[0].prf.f1))
        .unwrap();
    line(&format!("best of grid ({})", cfg.label()), best);

    for w in DEFAULT_WIDTHS {
        let model = fit_ridge_baseline(&train_set, &norm, w, &default_alpha_grid(), DEFAULT_FOLDS, 0)?;
        line(&format!("ridge w={w}"), &evaluate(&test, &ridge_predictions(&model, &test, &norm)?, ds.num_states(), &eval)?);
    }

    for v in Variant::ALL {
        let start = Instant::now();
        let arch = ArchitectureConfig::preset(Preset::Desk, ds.channel_names.len(), ds.num_states()).with_variant(v);
        let cfg = TrainingConfig {
            max_epochs: epochs,
            ..TrainingConfig::default()
        };
        let (model, history) = train(&ds, &arch, &cfg)?;
        let r = evaluate(&test, &nn_predictions(&model, &test)?, ds.num_states(), &eval)?;
        line(
            &format!("{} ({} ep, {:.0}s)", v.as_str(), history.epochs.len(), start.elapsed().as_secs_f64()),
            &r,
        );
    }
    Ok(())
}
