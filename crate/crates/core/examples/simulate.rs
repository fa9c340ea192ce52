//! Simulate a handful of labeled flights and write them as flight files.
//!
//! cargo run --release --example simulate -- [flights] [out_dir]

use std::path::PathBuf;

use stateinfer::data::{save_dataset, SplitFractions};
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn main() -> stateinfer::Result<()> {
    let mut args = std::env::args().skip(1);
    let flights: usize = args.next().map_or(8, |a| a.parse().expect("flight count"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("stateinfer-flights"), PathBuf::from);

    let ds = generate_dataset(flights, &SimConfig::default(), &Profile::Desk.plan_profile(), 7)?
        .split(&SplitFractions::default(), 7)?;

    for s in &ds.samples {
        let ann = s.annotation.as_ref().expect("simulated flights are labeled");
        let plan: Vec<&str> = ann.entries().iter().map(|c| ds.state_names[c.state].as_str()).collect();
        println!("{} {:>5} samples  {:?}  {}", s.id, s.series.len(), s.split.unwrap(), plan.join(" > "));
    }
    save_dataset(&ds, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
