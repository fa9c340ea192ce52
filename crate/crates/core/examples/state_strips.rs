//! Score a labeling and draw truth-vs-prediction strips as SVG.

use stateinfer::data::{expand_labels, LabelSequence};
use stateinfer::metrics::{evaluate, render_state_strip, EvalConfig, PredictionRecord};
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

fn main() -> stateinfer::Result<()> {
    let ds = generate_dataset(2, &SimConfig::default(), &Profile::Desk.plan_profile(), 5)?;
    let out = std::env::temp_dir().join("stateinfer-strips");
    std::fs::create_dir_all(&out).expect("strip dir");

    // A fake predictor: the truth delayed by four samples (under one second).
    let mut preds = Vec::new();
    for s in &ds.samples {
        let truth = expand_labels(s.annotation.as_ref().unwrap(), s.series.len())?;
        let mut late = vec![truth.states[0]; 4];
        late.extend_from_slice(&truth.states[..truth.len() - 4]);
        let late = LabelSequence::new(late);
        let mask = vec![true; late.len()];
        let svg = render_state_strip(&truth, &late, &mask, 600);
        std::fs::write(out.join(format!("{}.svg", s.id)), svg).expect("write strip");
        preds.push(PredictionRecord {
            id: s.id.clone(),
            change_points: stateinfer::data::derive_change_points(&late, &mask).iter().map(|c| c.t).collect(),
            labels: Some(late.states),
            eval_start: 0,
        });
    }

    let samples: Vec<_> = ds.samples.iter().collect();
    let report = evaluate(&samples, &preds, ds.num_states(), &EvalConfig::default())?;
    for c in &report.aggregate.cpd {
        println!("CPD tau={}s  tp {} fp {} fn {}  F1 {:.3}", c.tau_seconds, c.confusion.tp, c.confusion.fp, c.confusion.fn_, c.prf.f1);
    }
    let cls = report.aggregate.classification.unwrap();
    println!("macro F1 {:.4}, accuracy {:.4}", cls.f1, cls.accuracy);
    println!("strips in {}", out.display());
    Ok(())
}
