//! Classical change point detection on one simulated flight.

use stateinfer::cpd::{detect, CostKind, CpdConfig, SearchMethod};
use stateinfer::data::Normalizer;
use stateinfer::metrics::{cpd_confusion_times, cpd_prf};
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn main() -> stateinfer::Result<()> {
    let ds = generate_dataset(1, &SimConfig::default(), &Profile::Desk.plan_profile(), 11)?;
    let flight = &ds.samples[0];
    let truth = flight.annotation.as_ref().unwrap().change_times();
    println!("true changes   {truth:?}");

    // Standardize channels so one penalty fits all of them.
    let signal = Normalizer::fit([&flight.series])?.apply(&flight.series)?;

    for (search, cost, penalty) in [
        (SearchMethod::BottomUp, CostKind::L2, 100.0),
        (SearchMethod::BottomUp, CostKind::Normal, 500.0),
        (SearchMethod::Window, CostKind::L1, 100.0),
        (SearchMethod::Window, CostKind::Normal, 500.0),
    ] {
        let cfg = CpdConfig::new(search, cost, penalty);
        let seg = detect(signal.values(), &cfg)?;
        let prf = cpd_prf(&cpd_confusion_times(&truth, &seg.breakpoints, 15));
        println!("{:<22} {:?}  F1@3s {:.2}", cfg.label(), seg.breakpoints, prf.f1);
    }
    Ok(())
}
