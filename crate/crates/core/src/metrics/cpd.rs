use serde::{Deserialize, Serialize};

use crate::data::ChangePoint;
use crate::error::{Error, Result};

/// Tolerances reported throughout, in seconds.
pub const DEFAULT_TAUS: [f64; 3] = [1.0, 3.0, 5.0];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpdConfusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tau_samples: usize,
}

impl CpdConfusion {
    /// Pools counts of two confusions at the same tolerance.
    pub fn add(&mut self, other: &CpdConfusion) {
        debug_assert_eq!(self.tau_samples, other.tau_samples);
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn harmonic(p: f64, r: f64) -> f64 {
    if p > 0.0 && r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// `round(tau_seconds * rate)`, which must be at least one sample.
pub fn tau_to_samples(tau_seconds: f64, sample_rate_hz: f64) -> Result<usize> {
    let samples = (tau_seconds * sample_rate_hz).round();
    if !(samples >= 1.0) {
        return Err(Error::NonPositiveTolerance(samples as i64));
    }
    Ok(samples as usize)
}

fn within(sorted: &[usize], t: usize, tau: usize) -> bool {
    let i = sorted.partition_point(|&x| x < t);
    let near = |j: usize| sorted.get(j).is_some_and(|&x| x.abs_diff(t) < tau);
    near(i) || (i > 0 && near(i - 1))
}

/// Set-membership counting: a prediction is a true positive when some true
/// point lies strictly within `tau` of it, and a true point is missed when
/// no prediction does. One true point can justify several predictions.
pub fn cpd_confusion_times(truth: &[usize], predicted: &[usize], tau_samples: usize) -> CpdConfusion {
    let mut t = truth.to_vec();
    t.sort_unstable();
    let mut p = predicted.to_vec();
    p.sort_unstable();
    let tp = predicted.iter().filter(|&&x| within(&t, x, tau_samples)).count();
    let fn_ = truth.iter().filter(|&&x| !within(&p, x, tau_samples)).count();
    CpdConfusion {
        tp,
        fp: predicted.len() - tp,
        fn_,
        tau_samples,
    }
}

pub fn cpd_confusion(
    truth: &[ChangePoint],
    predicted: &[ChangePoint],
    tau_seconds: f64,
    sample_rate_hz: f64,
) -> Result<CpdConfusion> {
    let tau = tau_to_samples(tau_seconds, sample_rate_hz)?;
    let t: Vec<usize> = truth.iter().map(|c| c.t).collect();
    let p: Vec<usize> = predicted.iter().map(|c| c.t).collect();
    Ok(cpd_confusion_times(&t, &p, tau))
}

/// Alternative one-to-one counting: repeatedly pairs the closest unmatched
/// (true, predicted) points within `tau`. Not used by default.
pub fn cpd_confusion_matched(truth: &[usize], predicted: &[usize], tau_samples: usize) -> CpdConfusion {
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, &a) in truth.iter().enumerate() {
        for (j, &b) in predicted.iter().enumerate() {
            let d = a.abs_diff(b);
            if d < tau_samples {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_unstable();
    let mut used_t = vec![false; truth.len()];
    let mut used_p = vec![false; predicted.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !used_t[i] && !used_p[j] {
            used_t[i] = true;
            used_p[j] = true;
            tp += 1;
        }
    }
    CpdConfusion {
        tp,
        fp: predicted.len() - tp,
        fn_: truth.len() - tp,
        tau_samples,
    }
}

/// Precision, recall and F1 with zero for every undefined ratio.
pub fn cpd_prf(c: &CpdConfusion) -> Prf {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Prf {
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}
