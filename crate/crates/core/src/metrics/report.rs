use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classification::{ClassCounts, ClassInclusion, ClassificationScores};
use super::cpd::{cpd_confusion_matched, cpd_confusion_times, cpd_prf, tau_to_samples, CpdConfusion, Prf, DEFAULT_TAUS};
use crate::data::{expand_labels, LabelSequence, Sample};
use crate::error::{Error, Result};

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    /// Per-timestep states, when the method labels timesteps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    /// Predicted change times in samples.
    #[serde(alias = "breakpoints")]
    pub change_points: Vec<usize>,
    /// Timesteps before this index are not scored.
    #[serde(default)]
    pub eval_start: usize,
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matching {
    /// Set-membership counting (the default).
    #[default]
    SetMembership,
    /// Greedy one-to-one pairing.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub taus: Vec<f64>,
    pub inclusion: ClassInclusion,
    pub matching: Matching,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            taus: DEFAULT_TAUS.to_vec(),
            inclusion: ClassInclusion::default(),
            matching: Matching::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdScore {
    pub tau_seconds: f64,
    #[serde(flatten)]
    pub confusion: CpdConfusion,
    #[serde(flatten)]
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightScores {
    pub id: String,
    pub cpd: Vec<CpdScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateScores {
    pub flights: usize,
    pub cpd: Vec<CpdScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: EvalConfig,
    /// Counts pooled over all flights before computing ratios.
    pub aggregate: AggregateScores,
    pub per_flight: Vec<FlightScores>,
}

impl EvaluationReport {
    pub fn cpd_at(&self, tau_seconds: f64) -> Option<&CpdScore> {
        self.aggregate.cpd.iter().find(|s| s.tau_seconds == tau_seconds)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn score(c: CpdConfusion, tau_seconds: f64) -> CpdScore {
    CpdScore {
        tau_seconds,
        confusion: c,
        prf: cpd_prf(&c),
    }
}

/// Scores predictions against the annotated `samples`, matched by id.
///
/// Change points and timesteps before a record's `eval_start` are ignored on
/// both sides.
pub fn evaluate(
    samples: &[&Sample],
    predictions: &[PredictionRecord],
    num_states: usize,
    config: &EvalConfig,
) -> Result<EvaluationReport> {
    let by_id: HashMap<&str, &PredictionRecord> = predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let rate = samples.first().map_or(1.0, |s| s.series.sample_rate_hz());
    let taus: Vec<usize> = config
        .taus
        .iter()
        .map(|&t| tau_to_samples(t, rate))
        .collect::<Result<_>>()?;
    let mut pooled_cpd: Vec<CpdConfusion> = taus
        .iter()
        .map(|&tau| CpdConfusion {
            tau_samples: tau,
            ..CpdConfusion::default()
        })
        .collect();
    let mut pooled_class: Option<ClassCounts> = None;
    let mut per_flight = Vec::with_capacity(samples.len());

    for sample in samples {
        let annotation = sample
            .annotation
            .as_ref()
            .ok_or_else(|| Error::InvalidAnnotation(format!("flight {} has no ground truth", sample.id)))?;
        let pred = by_id
            .get(sample.id.as_str())
            .ok_or_else(|| Error::InvalidConfig(format!("no prediction for flight {}", sample.id)))?;
        let len = sample.series.len();
        let start = pred.eval_start;
        let truth_cp: Vec<usize> = annotation.change_times().into_iter().filter(|&t| t >= start).collect();
        let pred_cp: Vec<usize> = pred.change_points.iter().copied().filter(|&t| t >= start && t < len).collect();
        let mut cpd = Vec::with_capacity(taus.len());
        for (k, &tau) in taus.iter().enumerate() {
            let c = match config.matching {
                Matching::SetMembership => cpd_confusion_times(&truth_cp, &pred_cp, tau),
                Matching::Greedy => cpd_confusion_matched(&truth_cp, &pred_cp, tau),
            };
            pooled_cpd[k].add(&c);
            cpd.push(score(c, config.taus[k]));
        }
        let classification = match &pred.labels {
            Some(labels) => {
                if labels.len() != len {
                    return Err(Error::LengthMismatch {
                        left: len,
                        right: labels.len(),
                    });
                }
                let truth = expand_labels(annotation, len)?;
                let mask: Vec<bool> = (0..len).map(|t| t >= start).collect();
                let counts = ClassCounts::tally(&truth, &LabelSequence::new(labels.clone()), &mask, num_states)?;
                let s = counts.scores(config.inclusion);
                match pooled_class.as_mut() {
                    Some(p) => p.add(&counts),
                    None => pooled_class = Some(counts),
                }
                Some(s)
            }
            None => None,
        };
        per_flight.push(FlightScores {
            id: sample.id.clone(),
            cpd,
            classification,
        });
    }

    Ok(EvaluationReport {
        config: config.clone(),
        aggregate: AggregateScores {
            flights: samples.len(),
            cpd: pooled_cpd
                .into_iter()
                .zip(&config.taus)
                .map(|(c, &t)| score(c, t))
                .collect(),
            classification: pooled_class.map(|c| c.scores(config.inclusion)),
        },
        per_flight,
    })
}
