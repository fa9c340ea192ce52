use std::fmt::Write;

use crate::data::LabelSequence;

/// Strips show the first 600 samples by default.
pub const DEFAULT_STRIP_SAMPLES: usize = 600;

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f",
    "#bab0ac", "#17becf", "#7f7f7f",
];

/// Stable color for a state id.
pub fn state_color(state: usize) -> String {
    match PALETTE.get(state) {
        Some(c) => c.to_string(),
        None => format!("hsl({}, 55%, 55%)", (state * 137) % 360),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub end: usize,
    pub state: usize,
}

/// Maximal constant stretches of unmasked labels among the first `max_samples`.
pub fn state_runs(labels: &LabelSequence, mask: &[bool], max_samples: usize) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    let limit = labels.len().min(max_samples);
    for t in 0..limit {
        if !mask.get(t).copied().unwrap_or(false) {
            continue;
        }
        let s = labels.states[t];
        match runs.last_mut() {
            Some(r) if r.end == t && r.state == s => r.end = t + 1,
            _ => runs.push(Run {
                start: t,
                end: t + 1,
                state: s,
            }),
        }
    }
    runs
}

const SCALE: usize = 2;
const BAND: usize = 24;

fn open_svg(width: usize) -> String {
    let height = 2 * BAND + 30;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" viewBox="0 0 {} {height}">"#,
        width + 70,
        width + 70
    );
    svg
}

fn band_label(svg: &mut String, label: &str, y: usize) {
    let _ = writeln!(
        svg,
        r#"<text x="2" y="{}" font-size="11" font-family="sans-serif">{label}</text>"#,
        y + BAND / 2 + 4
    );
}

fn state_band(svg: &mut String, label: &str, y: usize, seq: &LabelSequence, mask: &[bool], max_samples: usize) {
    band_label(svg, label, y);
    let _ = writeln!(svg, r#"<g class="{label}">"#);
    for r in state_runs(seq, mask, max_samples) {
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{y}" width="{}" height="{BAND}" fill="{}"><title>state {} [{}, {})</title></rect>"#,
            60 + r.start * SCALE,
            (r.end - r.start) * SCALE,
            state_color(r.state),
            r.state,
            r.start,
            r.end
        );
    }
    svg.push_str("</g>\n");
}

fn close_svg(mut svg: String, width: usize) -> String {
    let _ = writeln!(
        svg,
        r#"<text x="60" y="{}" font-size="10" font-family="sans-serif">samples 0..{}</text>"#,
        2 * BAND + 24,
        width / SCALE
    );
    svg.push_str("</svg>\n");
    svg
}

/// Two-band SVG: prediction on top, truth below.
pub fn render_state_strip(
    truth: &LabelSequence,
    pred: &LabelSequence,
    mask: &[bool],
    max_samples: usize,
) -> String {
    let width = truth.len().max(pred.len()).min(max_samples).max(1) * SCALE;
    let mut svg = open_svg(width);
    state_band(&mut svg, "pred", 4, pred, mask, max_samples);
    state_band(&mut svg, "truth", 8 + BAND, truth, mask, max_samples);
    close_svg(svg, width)
}

/// Strip for methods without state labels: predicted breakpoints as ticks
/// over the true state band.
pub fn render_breakpoint_strip(
    truth: &LabelSequence,
    breakpoints: &[usize],
    mask: &[bool],
    max_samples: usize,
) -> String {
    let limit = truth.len().min(max_samples);
    let width = limit.max(1) * SCALE;
    let mut svg = open_svg(width);
    band_label(&mut svg, "pred", 4);
    svg.push_str("<g class=\"pred\">\n");
    for &t in breakpoints.iter().filter(|&&t| t < limit && mask.get(t).copied().unwrap_or(false)) {
        let x = 60 + t * SCALE;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="4" x2="{x}" y2="{}" stroke="black" stroke-width="1"><title>change at {t}</title></line>"#,
            4 + BAND
        );
    }
    svg.push_str("</g>\n");
    state_band(&mut svg, "truth", 8 + BAND, truth, mask, max_samples);
    close_svg(svg, width)
}
