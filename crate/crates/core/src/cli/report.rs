//! Score tables and strip bundles.
//!
//! Detector outputs named like `bottomup-l2-100` are grouped by cost
//! function, then search and penalty; every other prediction file becomes a
//! method row with change point and classification columns.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cpd::{CostKind, SearchMethod};
use crate::data::{expand_labels, LabelSequence, Sample};
use crate::error::{Error, Result};
use crate::metrics::{render_breakpoint_strip, render_state_strip, EvaluationReport, PredictionRecord};

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<(SearchMethod, CostKind, f64)>,
    pub report: EvaluationReport,
}

/// Parses detector labels of the form `<search>-<cost>-<penalty>`.
pub fn parse_detector_label(label: &str) -> Option<(SearchMethod, CostKind, f64)> {
    let mut parts = label.splitn(3, '-');
    let search = parts.next()?.parse().ok()?;
    let cost = parts.next()?.parse().ok()?;
    let penalty = parts.next()?.parse().ok()?;
    Some((search, cost, penalty))
}

impl MethodReport {
    pub fn new(method: &str, report: EvaluationReport) -> Self {
        Self {
            method: method.to_string(),
            detector: parse_detector_label(method),
            report,
        }
    }
}

fn sort_key(r: &MethodReport) -> (usize, usize, usize, i64, String) {
    match r.detector {
        Some((s, c, p)) => (
            0,
            CostKind::ALL.iter().position(|&k| k == c).unwrap_or(0),
            SearchMethod::ALL.iter().position(|&k| k == s).unwrap_or(0),
            (p * 1000.0) as i64,
            r.method.clone(),
        ),
        None => (1, 0, 0, 0, r.method.clone()),
    }
}

pub fn sort_reports(reports: &mut [MethodReport]) {
    reports.sort_by_key(sort_key);
}

fn taus(reports: &[MethodReport]) -> Vec<f64> {
    reports
        .first()
        .map(|r| r.report.config.taus.clone())
        .unwrap_or_default()
}

/// Machine-readable table, scores as fractions.
pub fn scores_csv(reports: &[MethodReport]) -> String {
    let taus = taus(reports);
    let mut out = String::from("method,search,cost,penalty");
    for t in &taus {
        let _ = write!(out, ",cpd_precision_{t}s,cpd_recall_{t}s,cpd_f1_{t}s");
    }
    out.push_str(",precision,recall,f1,accuracy\n");
    for r in reports {
        let (s, c, p) = match r.detector {
            Some((s, c, p)) => (s.as_str().to_string(), c.as_str().to_string(), p.to_string()),
            None => Default::default(),
        };
        let _ = write!(out, "{},{s},{c},{p}", r.method);
        for t in &taus {
            match r.report.cpd_at(*t) {
                Some(x) => {
                    let _ = write!(out, ",{},{},{}", x.prf.precision, x.prf.recall, x.prf.f1);
                }
                None => out.push_str(",,,"),
            }
        }
        match &r.report.aggregate.classification {
            Some(c) => {
                let _ = writeln!(out, ",{},{},{},{}", c.precision, c.recall, c.f1, c.accuracy);
            }
            None => out.push_str(",,,,\n"),
        }
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:6.2}", 100.0 * x)
}

/// Human-readable tables in percent.
pub fn scores_text(reports: &[MethodReport]) -> String {
    let taus = taus(reports);
    let mut out = String::new();
    let mut tau_header = String::new();
    for t in &taus {
        let _ = write!(tau_header, " | tau={t}s  P      R      F1   ");
    }

    let detectors: Vec<&MethodReport> = reports.iter().filter(|r| r.detector.is_some()).collect();
    if !detectors.is_empty() {
        out.push_str("Change point detection baselines\n\n");
        let _ = writeln!(out, "{:<28} {:<13} {:>8}{tau_header}", "cost", "search", "penalty");
        let mut last_cost = None;
        for r in detectors {
            let (s, c, p) = r.detector.unwrap_or((SearchMethod::BottomUp, CostKind::L2, 0.0));
            let cost = if last_cost == Some(c) { "" } else { c.display_name() };
            last_cost = Some(c);
            let _ = write!(out, "{cost:<28} {:<13} {p:>8}", s.display_name());
            for t in &taus {
                match r.report.cpd_at(*t) {
                    Some(x) => {
                        let _ = write!(out, " |       {} {} {}", pct(x.prf.precision), pct(x.prf.recall), pct(x.prf.f1));
                    }
                    None => out.push_str(" |        -      -      -"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }

    let methods: Vec<&MethodReport> = reports.iter().filter(|r| r.detector.is_none()).collect();
    if !methods.is_empty() {
        out.push_str("Methods\n\n");
        let _ = writeln!(out, "{:<28}{tau_header} | class  P      R      F1     acc", "method");
        for r in methods {
            let _ = write!(out, "{:<28}", r.method);
            for t in &taus {
                match r.report.cpd_at(*t) {
                    Some(x) => {
                        let _ = write!(out, " |       {} {} {}", pct(x.prf.precision), pct(x.prf.recall), pct(x.prf.f1));
                    }
                    None => out.push_str(" |        -      -      -"),
                }
            }
            match &r.report.aggregate.classification {
                Some(c) => {
                    let _ = write!(
                        out,
                        " |       {} {} {} {}",
                        pct(c.precision),
                        pct(c.recall),
                        pct(c.f1),
                        pct(c.accuracy)
                    );
                }
                None => out.push_str(" |        -      -      -      -"),
            }
            out.push('\n');
        }
    }
    out
}

/// One SVG per prediction record; returns the written paths.
pub fn write_strips(
    dir: &Path,
    samples: &[&Sample],
    predictions: &[PredictionRecord],
    max_samples: usize,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(predictions.len());
    for p in predictions {
        let sample = samples
            .iter()
            .find(|s| s.id == p.id)
            .ok_or_else(|| Error::InvalidConfig(format!("no ground truth for flight {}", p.id)))?;
        let annotation = sample
            .annotation
            .as_ref()
            .ok_or_else(|| Error::InvalidAnnotation(format!("flight {} has no ground truth", p.id)))?;
        let len = sample.series.len();
        let truth = expand_labels(annotation, len)?;
        let mask: Vec<bool> = (0..len).map(|t| t >= p.eval_start).collect();
        let svg = match &p.labels {
            Some(labels) => render_state_strip(&truth, &LabelSequence::new(labels.clone()), &mask, max_samples),
            None => render_breakpoint_strip(&truth, &p.change_points, &mask, max_samples),
        };
        let path = dir.join(format!("{}.svg", p.id));
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
