//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! `ACCEPTANCE_ONLY=1,4,5` restricts the run to the listed criteria (criteria
//! 7 and 8 share the run of 6; 9 repeats 3 and 6).

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use stateinfer::baseline::{default_alpha_grid, DEFAULT_FOLDS, DEFAULT_WIDTHS};
use stateinfer::cpd::{bottom_up, config_grid, CostKind, SegmentCostModel};
use stateinfer::data::{
    derive_change_points, expand_labels, load_dataset, save_dataset, ChangePoint, Dataset, LabelSequence,
    LengthBounds, Normalizer, Sample, Split, SplitFractions, StateAnnotation,
};
use stateinfer::metrics::{
    cpd_confusion_times, cpd_prf, evaluate, macro_prf, tau_to_samples, EvalConfig, EvaluationReport,
};
use stateinfer::nn::{
    gradcheck, train, train_samples, ArchitectureConfig, ModelCheckpoint, Preset, TrainingConfig, Variant,
};
use stateinfer::pipeline::{cpd_grid_search, fit_ridge_baseline, nn_predictions, ridge_predictions};
use stateinfer::sim::{generate_dataset, Profile, SimConfig};

const NUM_STATES: usize = 9;
const FLIGHTS: usize = 200;
const DATA_SEED: u64 = 1;
const SPLIT_SEED: u64 = 0;
const OVERFIT_SEED: u64 = 3;

struct Outcome {
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn outcome(pass: bool, detail: String, start: Instant, budget: Duration) -> Outcome {
    let elapsed = start.elapsed();
    let within = elapsed <= budget;
    let detail = if within {
        detail
    } else {
        format!("{detail}; over time budget of {:?}", budget)
    };
    Outcome {
        pass: pass && within,
        detail,
        elapsed,
    }
}

// ---------------------------------------------------------------- criterion 1

fn encoding_worked_example() -> Outcome {
    let start = Instant::now();
    let names = ['a', 'b', 'c'];
    let ann = StateAnnotation::new(
        vec![
            ChangePoint::new(0, 0),
            ChangePoint::new(3, 1),
            ChangePoint::new(5, 2),
            ChangePoint::new(8, 0),
        ],
        3,
    )
    .unwrap();
    let labels = expand_labels(&ann, 10).unwrap();
    let text: String = labels.states.iter().map(|&s| names[s]).collect();
    let back = derive_change_points(&labels, &[true; 10]);
    let expected_back = vec![ChangePoint::new(3, 1), ChangePoint::new(5, 2), ChangePoint::new(8, 0)];
    let relabeled = StateAnnotation::from_labels(&labels.states, 3).unwrap();
    let pass = text == "aaabbcccaa" && back == expected_back && relabeled == ann;
    outcome(
        pass,
        format!("expanded `{text}`, derived change times {:?}", back.iter().map(|c| c.t).collect::<Vec<_>>()),
        start,
        Duration::from_secs(1),
    )
}

// ---------------------------------------------------------------- criterion 2

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    const INSTANCES: u64 = 25;
    let checks: [(&str, fn(u64) -> f64); 6] = [
        ("conv1d", gradcheck::check_conv1d),
        ("gru", gradcheck::check_gru),
        ("dense", gradcheck::check_dense),
        ("leaky_relu", gradcheck::check_leaky_relu),
        ("softmax", gradcheck::check_softmax),
        ("dice", gradcheck::check_dice),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, check) in checks {
        let worst = (0..INSTANCES).map(check).fold(0.0f64, f64::max);
        pass &= worst < 1e-4;
        parts.push(format!("{name} {worst:.1e}"));
    }
    outcome(
        pass,
        format!("max relative error over {INSTANCES} instances: {}", parts.join(", ")),
        start,
        Duration::from_secs(120),
    )
}

// ---------------------------------------------------------------- criterion 3

fn overfit_run() -> (ModelCheckpoint, Vec<f64>) {
    let ds = generate_dataset(2, &SimConfig::default(), &Profile::Desk.plan_profile(), OVERFIT_SEED).unwrap();
    let samples: Vec<&Sample> = ds.samples.iter().collect();
    let norm = Normalizer::fit(samples.iter().map(|s| &s.series)).unwrap();
    let arch = ArchitectureConfig::preset(Preset::Desk, ds.channel_names.len(), NUM_STATES);
    let cfg = TrainingConfig {
        max_epochs: 200,
        patience: 200,
        ..TrainingConfig::default()
    };
    let (ckpt, history) = train_samples(&samples, &samples, norm, &arch, &cfg).unwrap();
    let acc = history.epochs.iter().map(|e| e.val_accuracy).collect();
    (ckpt, acc)
}

fn overfit_oracle() -> (Outcome, Vec<u8>) {
    let start = Instant::now();
    let (ckpt, acc) = overfit_run();
    let first = acc.iter().position(|&a| a >= 0.99).map(|i| i + 1);
    let best = acc.iter().copied().fold(0.0, f64::max);
    let bytes = ckpt.to_bytes().unwrap();
    let detail = match first {
        Some(e) => format!("masked timestep accuracy reached 99% at epoch {e}, best {best:.4}"),
        None => format!("never reached 99% in {} epochs, best {best:.4}", acc.len()),
    };
    (outcome(first.is_some(), detail, start, Duration::from_secs(600)), bytes)
}

// ---------------------------------------------------------------- criterion 4

fn l2_cost(x: &Array2<f64>, a: usize, b: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..x.ncols() {
        let seg: Vec<f64> = (a..b).map(|t| x[[t, c]]).collect();
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        total += seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }
    total
}

fn l1_cost(x: &Array2<f64>, a: usize, b: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..x.ncols() {
        let mut seg: Vec<f64> = (a..b).map(|t| x[[t, c]]).collect();
        seg.sort_by(f64::total_cmp);
        let median = seg[seg.len() / 2];
        total += seg.iter().map(|v| (v - median).abs()).sum::<f64>();
    }
    total
}

fn objective(x: &Array2<f64>, cost: fn(&Array2<f64>, usize, usize) -> f64, bps: &[usize], penalty: f64) -> f64 {
    let mut bounds = vec![0];
    bounds.extend_from_slice(bps);
    bounds.push(x.nrows());
    bounds.windows(2).map(|w| cost(x, w[0], w[1])).sum::<f64>() + penalty * bps.len() as f64
}

fn brute_force(x: &Array2<f64>, cost: fn(&Array2<f64>, usize, usize) -> f64, jump: usize, penalty: f64) -> f64 {
    let grid: Vec<usize> = (1..).map(|k| k * jump).take_while(|&b| b < x.nrows()).collect();
    (0u32..1 << grid.len())
        .map(|mask| {
            let bps: Vec<usize> = grid
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &b)| b)
                .collect();
            objective(x, cost, &bps, penalty)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Noisy piecewise-constant signal with change points on the jump grid.
fn piecewise_signal(rng: &mut ChaCha8Rng, jump: usize) -> Array2<f64> {
    let len = rng.gen_range(12..=40);
    let channels = rng.gen_range(1..=3);
    let grid: Vec<usize> = (1..).map(|k| k * jump).take_while(|&b| b < len).collect();
    let changes = rng.gen_range(0..=3.min(grid.len()));
    let mut cps: Vec<usize> = rand::seq::index::sample(rng, grid.len(), changes)
        .into_iter()
        .map(|i| grid[i])
        .collect();
    cps.sort_unstable();
    let level = Normal::new(0.0, 3.0).unwrap();
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut x = Array2::zeros((len, channels));
    let mut bounds = vec![0];
    bounds.extend(cps);
    bounds.push(len);
    for w in bounds.windows(2) {
        for c in 0..channels {
            let mu = level.sample(rng);
            for t in w[0]..w[1] {
                x[[t, c]] = mu + noise.sample(rng);
            }
        }
    }
    x
}

fn cpd_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    const CASES: usize = 50;
    const JUMP: usize = 4;
    let mut worst = 0.0f64;
    let mut failures = 0;
    for case in 0..CASES {
        let x = piecewise_signal(&mut rng, JUMP);
        for (kind, cost) in [
            (CostKind::L2, l2_cost as fn(&Array2<f64>, usize, usize) -> f64),
            (CostKind::L1, l1_cost),
        ] {
            let penalty = rng.gen_range(0.5..10.0);
            let found = bottom_up(x.view(), &SegmentCostModel::new(kind), penalty, JUMP, 1).unwrap();
            let best = brute_force(&x, cost, JUMP, penalty);
            let ours = objective(&x, cost, &found.breakpoints, penalty);
            let gap = (ours - best).abs().max((found.objective - best).abs());
            worst = worst.max(gap);
            if gap > 1e-9 {
                failures += 1;
                eprintln!("criterion 4: case {case} {kind:?} penalty {penalty:.3}: bottom-up {ours} vs optimum {best}");
            }
        }
    }
    outcome(
        failures == 0,
        format!("{CASES} signals x {{L2, L1}}: {failures} mismatches, largest objective gap {worst:.1e}"),
        start,
        Duration::from_secs(60),
    )
}

// ---------------------------------------------------------------- criterion 5

/// Predictions with some true point strictly within tau are hits; true points
/// without any such prediction are misses.
fn tolerance_oracle(truth: &[usize], pred: &[usize], tau: usize) -> (usize, usize, usize) {
    let close = |a: usize, b: usize| (a as i64 - b as i64).abs() < tau as i64;
    let tp = pred.iter().filter(|&&p| truth.iter().any(|&t| close(t, p))).count();
    let fn_ = truth.iter().filter(|&&t| !pred.iter().any(|&p| close(t, p))).count();
    (tp, pred.len() - tp, fn_)
}

fn dense_macro_oracle(truth: &[usize], pred: &[usize], k: usize) -> (f64, f64, f64) {
    let mut m = vec![vec![0usize; k]; k];
    for (&t, &p) in truth.iter().zip(pred) {
        m[t][p] += 1;
    }
    let (mut ps, mut rs) = (Vec::new(), Vec::new());
    for c in 0..k {
        let row: usize = m[c].iter().sum();
        let col: usize = (0..k).map(|r| m[r][c]).sum();
        if row == 0 && col == 0 {
            continue;
        }
        ps.push(if col == 0 { 0.0 } else { m[c][c] as f64 / col as f64 });
        rs.push(if row == 0 { 0.0 } else { m[c][c] as f64 / row as f64 });
    }
    let p = ps.iter().sum::<f64>() / ps.len() as f64;
    let r = rs.iter().sum::<f64>() / rs.len() as f64;
    let f = if p > 0.0 && r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

fn metric_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let taus: Vec<usize> = [1.0, 3.0, 5.0].iter().map(|&s| tau_to_samples(s, 5.0).unwrap()).collect();
    let (mut cpd_bad, mut mono_bad, mut class_bad) = (0, 0, 0);
    const CASES: usize = 1000;
    for _ in 0..CASES {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<usize> {
            let n = rng.gen_range(0..12);
            let set: BTreeSet<usize> = (0..n).map(|_| rng.gen_range(0..300)).collect();
            set.into_iter().collect()
        };
        let truth = draw(&mut rng);
        let pred = draw(&mut rng);
        let mut prev: Option<(usize, usize, f64, f64, f64)> = None;
        for &tau in &taus {
            let c = cpd_confusion_times(&truth, &pred, tau);
            if (c.tp, c.fp, c.fn_) != tolerance_oracle(&truth, &pred, tau) {
                cpd_bad += 1;
            }
            let s = cpd_prf(&c);
            if let Some((tp, fn_, p, r, f)) = prev {
                if c.tp < tp || c.fn_ > fn_ || s.precision < p || s.recall < r || s.f1 < f {
                    mono_bad += 1;
                }
            }
            prev = Some((c.tp, c.fn_, s.precision, s.recall, s.f1));
        }

        let k = rng.gen_range(2..=NUM_STATES);
        let len = rng.gen_range(1..200);
        let t: Vec<usize> = (0..len).map(|_| rng.gen_range(0..k)).collect();
        let p: Vec<usize> = (0..len).map(|i| if rng.gen_bool(0.6) { t[i] } else { rng.gen_range(0..k) }).collect();
        let got = macro_prf(&LabelSequence::new(t.clone()), &LabelSequence::new(p.clone()), &vec![true; len], k).unwrap();
        if (got.precision, got.recall, got.f1) != dense_macro_oracle(&t, &p, k) {
            class_bad += 1;
        }
    }
    outcome(
        cpd_bad + mono_bad + class_bad == 0,
        format!(
            "{CASES} cases: {cpd_bad} confusion mismatches over 3 tolerances, {class_bad} macro mismatches, {mono_bad} monotonicity violations"
        ),
        start,
        Duration::from_secs(60),
    )
}

// ------------------------------------------------------------ criteria 6 to 8

struct Experiment {
    dataset: Dataset,
    grid_best: (String, f64),
    grid_reports: Vec<EvaluationReport>,
    ridge_best: (usize, f64),
    variants: Vec<(Variant, EvaluationReport, ModelCheckpoint, Duration)>,
    grid_time: Duration,
}

fn synthetic_dataset() -> Dataset {
    generate_dataset(FLIGHTS, &SimConfig::default(), &Profile::Desk.plan_profile(), DATA_SEED)
        .unwrap()
        .split(&SplitFractions::default(), SPLIT_SEED)
        .unwrap()
}

fn train_variant(ds: &Dataset, variant: Variant) -> (EvaluationReport, ModelCheckpoint, Duration) {
    let start = Instant::now();
    let arch = ArchitectureConfig::preset(Preset::Desk, ds.channel_names.len(), NUM_STATES).with_variant(variant);
    let (ckpt, _) = train(ds, &arch, &TrainingConfig::default()).unwrap();
    let test: Vec<&Sample> = ds.in_split(Split::Test).collect();
    let report = evaluate(&test, &nn_predictions(&ckpt, &test).unwrap(), NUM_STATES, &EvalConfig::default()).unwrap();
    (report, ckpt, start.elapsed())
}

/// The CPD grid and the hybrid model: everything criterion 6 needs.
fn grid_and_hybrid(ds: &Dataset) -> (Vec<EvaluationReport>, (String, f64), Duration, EvaluationReport, ModelCheckpoint, Duration) {
    let norm = ds.fit_normalizer().unwrap();
    let test: Vec<&Sample> = ds.in_split(Split::Test).collect();
    let start = Instant::now();
    let grid = cpd_grid_search(&test, &norm, &config_grid(), NUM_STATES, &EvalConfig::default()).unwrap();
    let grid_time = start.elapsed();
    let best = grid
        .iter()
        .map(|(c, r)| (c.label(), r.cpd_at(1.0).unwrap().prf.f1))
        .fold((String::new(), -1.0), |a, b| if b.1 > a.1 { b } else { a });
    let reports = grid.into_iter().map(|(_, r)| r).collect();
    let (report, ckpt, t) = train_variant(ds, Variant::Hybrid);
    (reports, best, grid_time, report, ckpt, t)
}

fn run_experiment(all_variants: bool) -> Experiment {
    let dataset = synthetic_dataset();
    let (grid_reports, grid_best, grid_time, hybrid, ckpt, t) = grid_and_hybrid(&dataset);
    let mut variants = vec![(Variant::Hybrid, hybrid, ckpt, t)];
    let mut ridge_best = (0, -1.0);
    if all_variants {
        let norm = dataset.fit_normalizer().unwrap();
        let train_set: Vec<&Sample> = dataset.in_split(Split::Train).collect();
        let test: Vec<&Sample> = dataset.in_split(Split::Test).collect();
        for w in DEFAULT_WIDTHS {
            let model = fit_ridge_baseline(&train_set, &norm, w, &default_alpha_grid(), DEFAULT_FOLDS, 0).unwrap();
            let preds = ridge_predictions(&model, &test, &norm).unwrap();
            let r = evaluate(&test, &preds, NUM_STATES, &EvalConfig::default()).unwrap();
            let f1 = r.aggregate.classification.unwrap().f1;
            if f1 > ridge_best.1 {
                ridge_best = (w, f1);
            }
        }
        for v in [Variant::RnnOnly, Variant::CnnOnly] {
            let (r, c, t) = train_variant(&dataset, v);
            variants.push((v, r, c, t));
        }
    }
    Experiment {
        dataset,
        grid_best,
        grid_reports,
        ridge_best,
        variants,
        grid_time,
    }
}

fn score_bytes(grid: &[EvaluationReport], hybrid: &EvaluationReport) -> Vec<u8> {
    serde_json::to_vec(&(grid, hybrid)).unwrap()
}

fn macro_f1(r: &EvaluationReport) -> f64 {
    r.aggregate.classification.as_ref().unwrap().f1
}

fn beats_grid(e: &Experiment) -> Outcome {
    let start = Instant::now();
    let (_, hybrid, _, t) = &e.variants[0];
    let f1 = hybrid.cpd_at(1.0).unwrap().prf.f1;
    let margin = 100.0 * (f1 - e.grid_best.1);
    let mut o = outcome(
        f1 > e.grid_best.1 && margin >= 10.0,
        format!(
            "{} test flights: hybrid CPD F1 at 1 s {:.2}% vs best grid ({}) {:.2}%, margin {margin:.2} points",
            e.dataset.in_split(Split::Test).count(),
            100.0 * f1,
            e.grid_best.0,
            100.0 * e.grid_best.1
        ),
        start,
        Duration::from_secs(7200),
    );
    o.elapsed = *t + e.grid_time;
    o.pass &= o.elapsed <= Duration::from_secs(7200);
    o
}

fn beats_ridge(e: &Experiment) -> Outcome {
    let start = Instant::now();
    let f1 = macro_f1(&e.variants[0].1);
    let margin = 100.0 * (f1 - e.ridge_best.1);
    outcome(
        f1 > e.ridge_best.1 && margin >= 5.0,
        format!(
            "hybrid macro F1 {:.2}% vs best ridge (w={}) {:.2}%, margin {margin:.2} points",
            100.0 * f1,
            e.ridge_best.0,
            100.0 * e.ridge_best.1
        ),
        start,
        Duration::from_secs(7200),
    )
}

fn ablation_order(e: &Experiment) -> Outcome {
    let cpd3: Vec<f64> = e.variants.iter().map(|v| v.1.cpd_at(3.0).unwrap().prf.f1).collect();
    let cls: Vec<f64> = e.variants.iter().map(|v| macro_f1(&v.1)).collect();
    let ordered = |x: &[f64]| x[0] >= x[1] && x[1] >= x[2];
    let total: Duration = e.variants.iter().map(|v| v.3).sum();
    let cpd1: Vec<String> = e
        .variants
        .iter()
        .map(|v| format!("{:.2}", 100.0 * v.1.cpd_at(1.0).unwrap().prf.f1))
        .collect();
    Outcome {
        pass: ordered(&cpd3) && ordered(&cls) && total <= Duration::from_secs(3 * 3600),
        detail: format!(
            "hybrid/rnn_only/cnn_only CPD F1 at 3 s {:.2}/{:.2}/{:.2}, macro F1 {:.2}/{:.2}/{:.2} (CPD F1 at 1 s {})",
            100.0 * cpd3[0],
            100.0 * cpd3[1],
            100.0 * cpd3[2],
            100.0 * cls[0],
            100.0 * cls[1],
            100.0 * cls[2],
            cpd1.join("/")
        ),
        elapsed: total,
    }
}

// ---------------------------------------------------------------- criterion 9

fn determinism(overfit_bytes: Option<&[u8]>, e: Option<&Experiment>) -> Outcome {
    let start = Instant::now();
    let overfit_again = overfit_run().0.to_bytes().unwrap();
    let first_overfit = match overfit_bytes {
        Some(b) => b.to_vec(),
        None => overfit_run().0.to_bytes().unwrap(),
    };
    let (ckpt_a, scores_a) = match e {
        Some(e) => (
            e.variants[0].2.to_bytes().unwrap(),
            score_bytes(&e.grid_reports, &e.variants[0].1),
        ),
        None => {
            let (g, _, _, r, c, _) = grid_and_hybrid(&synthetic_dataset());
            (c.to_bytes().unwrap(), score_bytes(&g, &r))
        }
    };
    let (g, _, _, r, c, _) = grid_and_hybrid(&synthetic_dataset());
    let ckpt_b = c.to_bytes().unwrap();
    let scores_b = score_bytes(&g, &r);
    let same = [
        ("overfit checkpoint", first_overfit == overfit_again),
        ("experiment checkpoint", ckpt_a == ckpt_b),
        ("score files", scores_a == scores_b),
    ];
    let detail = same
        .iter()
        .map(|(n, ok)| format!("{n} {}", if *ok { "identical" } else { "DIFFERENT" }))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(same.iter().all(|s| s.1), detail, start, Duration::from_secs(4 * 3600))
}

// --------------------------------------------------------------- criterion 10

fn round_trips(ckpt: Option<&ModelCheckpoint>) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_dataset(6, &SimConfig::default(), &Profile::Desk.plan_profile(), 10)
        .unwrap()
        .split(&SplitFractions::default(), 0)
        .unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let back = load_dataset(dir.path(), LengthBounds::default()).unwrap();
    let flights_equal = back == ds;

    let fallback;
    let ckpt = match ckpt {
        Some(c) => c,
        None => {
            let arch = ArchitectureConfig::preset(Preset::Desk, ds.channel_names.len(), NUM_STATES);
            let train_set: Vec<&Sample> = ds.samples.iter().collect();
            let norm = Normalizer::fit(train_set.iter().map(|s| &s.series)).unwrap();
            let cfg = TrainingConfig {
                max_epochs: 1,
                ..TrainingConfig::default()
            };
            fallback = train_samples(&train_set, &train_set, norm, &arch, &cfg).unwrap().0;
            &fallback
        }
    };
    let path = dir.path().join("model.ckpt");
    ckpt.save(&path).unwrap();
    let loaded = ModelCheckpoint::load(&path).unwrap();
    let mut bitwise = true;
    for s in &ds.samples {
        let a = ckpt.predict(&s.series).unwrap();
        let b = loaded.predict(&s.series).unwrap();
        bitwise &= a.labels == b.labels
            && a
                .probabilities
                .iter()
                .zip(b.probabilities.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits());
    }
    outcome(
        flights_equal && bitwise,
        format!(
            "flight files {} after write/read, checkpoint predictions {} after save/load",
            if flights_equal { "identical" } else { "DIFFER" },
            if bitwise { "bitwise identical" } else { "DIFFER" }
        ),
        start,
        Duration::from_secs(60),
    )
}

// ------------------------------------------------------------------- driver

fn selected() -> BTreeSet<usize> {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(v) if !v.trim().is_empty() => v.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        _ => (1..=10).collect(),
    }
}

fn report(n: usize, name: &str, o: &Outcome) -> String {
    format!(
        "criterion {n:>2} {:<4} {name} ({:.1} s): {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.elapsed.as_secs_f64(),
        o.detail
    )
}

fn main() {
    // Under `cargo test -- --list` or filters meant for other targets, do nothing.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let want = selected();
    let mut lines: Vec<(usize, String, bool)> = Vec::new();
    let mut record = |n: usize, name: &str, o: Outcome| {
        let line = report(n, name, &o);
        println!("{line}");
        lines.push((n, line, o.pass));
    };

    if want.contains(&1) {
        record(1, "encoding worked example", encoding_worked_example());
    }
    if want.contains(&2) {
        record(2, "gradient suite", gradient_suite());
    }
    if want.contains(&4) {
        record(4, "bottom-up equals brute force", cpd_oracle());
    }
    if want.contains(&5) {
        record(5, "metric fidelity", metric_fidelity());
    }
    let mut overfit_bytes = None;
    if want.contains(&3) {
        let (o, bytes) = overfit_oracle();
        overfit_bytes = Some(bytes);
        record(3, "overfit two flights", o);
    }
    let experiment = if want.iter().any(|n| (6..=8).contains(n)) {
        Some(run_experiment(want.contains(&7) || want.contains(&8)))
    } else {
        None
    };
    if let Some(e) = &experiment {
        if want.contains(&6) {
            record(6, "hybrid beats CPD grid", beats_grid(e));
        }
        if want.contains(&7) {
            record(7, "hybrid beats ridge", beats_ridge(e));
        }
        if want.contains(&8) {
            record(8, "ablation ordering", ablation_order(e));
        }
    }
    if want.contains(&9) {
        record(9, "determinism", determinism(overfit_bytes.as_deref(), experiment.as_ref()));
    }
    if want.contains(&10) {
        let ckpt = experiment.as_ref().map(|e| &e.variants[0].2);
        record(10, "round trips", round_trips(ckpt));
    }

    println!("\nacceptance summary");
    lines.sort_by_key(|l| l.0);
    for (_, line, _) in &lines {
        println!("{line}");
    }
    let failed = lines.iter().filter(|l| !l.2).count();
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
