//! Train the desk-scale hybrid network, save it, and score the test split.
//!
//! cargo run --release --example train_hybrid -- [flights] [max_epochs]

use stateinfer::data::{Sample, Split, SplitFractions};
use stateinfer::metrics::{evaluate, EvalConfig};
use stateinfer::nn::{train, ArchitectureConfig, ModelCheckpoint, Preset, TrainingConfig, Variant};
use stateinfer::pipeline::nn_predictions;
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn main() -> stateinfer::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let flights: usize = args.next().map_or(60, |a| a.parse().expect("flight count"));
    let epochs: usize = args.next().map_or(15, |a| a.parse().expect("epoch count"));

    let ds = generate_dataset(flights, &SimConfig::default(), &Profile::Desk.plan_profile(), 1)?
        .split(&SplitFractions::default(), 0)?;
    let arch = ArchitectureConfig::preset(Preset::Desk, ds.channel_names.len(), ds.num_states())
        .with_variant(Variant::Hybrid);
    let cfg = TrainingConfig {
        max_epochs: epochs,
        ..TrainingConfig::default()
    };
    let (model, history) = train(&ds, &arch, &cfg)?;
    print!("{}", history.to_csv());

    let path = std::env::temp_dir().join("stateinfer-hybrid.ckpt");
    model.save(&path)?;
    let model = ModelCheckpoint::load(&path)?;

    let test: Vec<&Sample> = ds.in_split(Split::Test).collect();
    let report = evaluate(&test, &nn_predictions(&model, &test)?, ds.num_states(), &EvalConfig::default())?;
    for c in &report.aggregate.cpd {
        println!("CPD tau={}s  P {:.3} R {:.3} F1 {:.3}", c.tau_seconds, c.prf.precision, c.prf.recall, c.prf.f1);
    }
    let cls = report.aggregate.classification.unwrap();
    println!("macro P {:.3} R {:.3} F1 {:.3}, accuracy {:.3}", cls.precision, cls.recall, cls.f1, cls.accuracy);
    println!("checkpoint at {}", path.display());
    Ok(())
}
