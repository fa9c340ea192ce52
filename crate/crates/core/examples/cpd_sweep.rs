//! The 42-configuration detector sweep on a small synthetic test split.
//!
//! cargo run --release --example cpd_sweep -- [flights]

use stateinfer::cpd::config_grid;
use stateinfer::data::{Sample, Split, SplitFractions};
use stateinfer::metrics::EvalConfig;
use stateinfer::pipeline::cpd_grid_search;
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn main() -> stateinfer::Result<()> {
    let flights: usize = std::env::args().nth(1).map_or(60, |a| a.parse().expect("flight count"));
    let ds = generate_dataset(flights, &SimConfig::default(), &Profile::Desk.plan_profile(), 1)?
        .split(&SplitFractions::default(), 0)?;
    let norm = ds.fit_normalizer()?;
    let test: Vec<&Sample> = ds.in_split(Split::Test).collect();

    let mut rows = cpd_grid_search(&test, &norm, &config_grid(), ds.num_states(), &EvalConfig::default())?;
    rows.sort_by(|a, b| b.1.aggregate.cpd[0].prf.f1.total_cmp(&a.1.aggregate.cpd[0].prf.f1));

    println!("{:<24} {:>7} {:>7} {:>7}", "detector", "F1@1s", "F1@3s", "F1@5s");
    for (cfg, report) in &rows {
        let f: Vec<String> = report.aggregate.cpd.iter().map(|c| format!("{:7.2}", 100.0 * c.prf.f1)).collect();
        println!("{:<24} {}", cfg.label(), f.join(" "));
    }
    Ok(())
}
