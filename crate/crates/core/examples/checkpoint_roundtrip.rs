//! A checkpoint written to disk predicts bit for bit what the in-memory model does.

use stateinfer::data::Normalizer;
use stateinfer::nn::{load_checkpoint, save_checkpoint, train_samples, ArchitectureConfig, Preset, TrainingConfig};
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn main() -> stateinfer::Result<()> {
    let ds = generate_dataset(3, &SimConfig::default(), &Profile::Desk.plan_profile(), 2)?;
    let samples: Vec<_> = ds.samples.iter().collect();
    let norm = Normalizer::fit(samples.iter().map(|s| &s.series))?;
    let arch = ArchitectureConfig::preset(Preset::Desk, ds.channel_names.len(), ds.num_states());
    let cfg = TrainingConfig {
        max_epochs: 2,
        ..TrainingConfig::default()
    };
    let (model, _) = train_samples(&samples, &samples, norm, &arch, &cfg)?;

    let path = std::env::temp_dir().join("stateinfer-roundtrip.ckpt");
    save_checkpoint(&model, &path)?;
    let loaded = load_checkpoint(&path)?;
    println!("{} bytes, {} parameters", std::fs::metadata(&path).unwrap().len(), loaded.network.num_parameters());

    for s in &ds.samples {
        let a = model.predict(&s.series)?;
        let b = loaded.predict(&s.series)?;
        let same = a.probabilities.iter().zip(b.probabilities.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
        println!("{}: identical = {same}", s.id);
    }
    Ok(())
}
