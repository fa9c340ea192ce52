//! Flight CSV files and the JSON-lines dataset manifest.
//!
//! A flight file has the header `t,<channel_1>,...,<channel_n>[,state]`, one
//! row per sample. `t` is the elapsed time in seconds; `state` holds a state
//! name from the manifest's state table. The manifest's first line is a header
//! record, followed by one record per flight.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, LengthBounds, Sample, Split};
use super::series::{MultivariateSeries, StateAnnotation};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub state_names: Vec<String>,
    pub channel_names: Vec<String>,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub split: Option<Split>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ManifestLine {
    Header(ManifestHeader),
    Flight(ManifestEntry),
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Writes one flight file. When `labels` is given the `state` column is emitted.
pub fn write_flight_csv(
    path: &Path,
    series: &MultivariateSeries,
    labels: Option<(&StateAnnotation, &[String])>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = String::from("t");
    for name in series.channel_names() {
        header.push(',');
        header.push_str(name);
    }
    if labels.is_some() {
        header.push_str(",state");
    }
    writeln!(out, "{header}").map_err(io)?;

    let states = match labels {
        Some((ann, _)) => Some(super::encoding::expand_labels(ann, series.len())?),
        None => None,
    };
    let mut line = String::new();
    for (t, row) in series.values().rows().into_iter().enumerate() {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(line, "{}", t as f64 / series.sample_rate_hz());
        for v in row {
            let _ = write!(line, ",{v}");
        }
        if let (Some(states), Some((_, names))) = (&states, labels) {
            let _ = write!(line, ",{}", names[states.states[t]]);
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a flight file. `state_names` resolves the optional `state` column.
pub fn read_flight_csv(
    path: &Path,
    sample_rate_hz: f64,
    state_names: &[String],
) -> Result<(MultivariateSeries, Option<StateAnnotation>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.first() != Some(&"t") {
        return Err(parse_err(path, 1, "first column must be `t`"));
    }
    let has_state = cols.last() == Some(&"state");
    let channel_end = if has_state { cols.len() - 1 } else { cols.len() };
    let channel_names: Vec<String> = cols[1..channel_end].iter().map(|s| s.to_string()).collect();
    let n = channel_names.len();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != cols.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", cols.len(), record.len()),
            ));
        }
        record[0]
            .trim()
            .parse::<f64>()
            .map_err(|e| parse_err(path, line, format!("bad time `{}`: {e}", &record[0])))?;
        for field in record.iter().take(channel_end).skip(1) {
            let v = field
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(path, line, format!("bad value `{field}`: {e}")))?;
            data.push(v);
        }
        if has_state {
            let name = record[cols.len() - 1].trim();
            let id = state_names
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| parse_err(path, line, format!("unknown state `{name}`")))?;
            labels.push(id);
        }
    }
    let len = data.len() / n.max(1);
    let values = Array2::from_shape_vec((len, n), data)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let series = MultivariateSeries::new(values, sample_rate_hz, channel_names)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let annotation = if has_state {
        Some(
            StateAnnotation::from_labels(&labels, state_names.len())
                .map_err(|e| parse_err(path, 2, e.to_string()))?,
        )
    } else {
        None
    };
    Ok((series, annotation))
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Reads the manifest header and entries without touching flight files.
pub fn read_manifest(path: &Path) -> Result<(ManifestHeader, Vec<ManifestEntry>)> {
    let path = manifest_path(path);
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut header = None;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        let lineno = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestLine =
            serde_json::from_str(&line).map_err(|e| parse_err(&path, lineno, e.to_string()))?;
        match record {
            ManifestLine::Header(h) if header.is_none() && entries.is_empty() => header = Some(h),
            ManifestLine::Header(_) => {
                return Err(parse_err(&path, lineno, "header must be the first record"))
            }
            ManifestLine::Flight(entry) => {
                if header.is_none() {
                    return Err(parse_err(&path, lineno, "missing header record"));
                }
                entries.push(entry);
            }
        }
    }
    let header = header.ok_or_else(|| parse_err(&path, 1, "missing header record"))?;
    Ok((header, entries))
}

/// Loads a dataset from a manifest file (or a directory containing one),
/// dropping flights whose length falls outside `bounds`.
pub fn load_dataset(path: &Path, bounds: LengthBounds) -> Result<Dataset> {
    let manifest = manifest_path(path);
    let (header, entries) = read_manifest(&manifest)?;
    let root = manifest.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::with_capacity(entries.len());
    for entry in entries {
        let (series, annotation) =
            read_flight_csv(&root.join(&entry.path), header.sample_rate_hz, &header.state_names)?;
        if series.channel_names() != header.channel_names.as_slice() {
            return Err(parse_err(
                &root.join(&entry.path),
                1,
                "channel names differ from the manifest header",
            ));
        }
        samples.push(Sample {
            id: entry.id,
            series,
            annotation,
            split: entry.split,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset {
        samples,
        state_names: header.state_names,
        channel_names: header.channel_names,
        sample_rate_hz: header.sample_rate_hz,
    }
    .retain_lengths(bounds)
}

/// Writes `dir/manifest.jsonl` and one `dir/flights/<id>.csv` per sample.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    let flights = dir.join("flights");
    fs::create_dir_all(&flights).map_err(|e| Error::io(&flights, e))?;
    let manifest = dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut out = BufWriter::new(file);
    let header = ManifestLine::Header(ManifestHeader {
        state_names: dataset.state_names.clone(),
        channel_names: dataset.channel_names.clone(),
        sample_rate_hz: dataset.sample_rate_hz,
    });
    writeln!(out, "{}", serde_json::to_string(&header)?).map_err(|e| Error::io(&manifest, e))?;
    for sample in &dataset.samples {
        let rel = PathBuf::from("flights").join(format!("{}.csv", sample.id));
        write_flight_csv(
            &dir.join(&rel),
            &sample.series,
            sample
                .annotation
                .as_ref()
                .map(|a| (a, dataset.state_names.as_slice())),
        )?;
        let entry = ManifestLine::Flight(ManifestEntry {
            id: sample.id.clone(),
            path: rel,
            split: sample.split,
        });
        writeln!(out, "{}", serde_json::to_string(&entry)?)
            .map_err(|e| Error::io(&manifest, e))?;
    }
    out.flush().map_err(|e| Error::io(&manifest, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ChangePoint;

    fn annotation_from_pairs(pairs: &[(usize, usize)], num_states: usize) -> Result<StateAnnotation> {
        StateAnnotation::new(
            pairs.iter().map(|&(t, s)| ChangePoint::new(t, s)).collect(),
            num_states,
        )
    }

    fn small_dataset() -> Dataset {
        let names = vec!["alt".to_string(), "thr".to_string()];
        let mk = |id: &str, len: usize, split| {
            let series = MultivariateSeries::from_channels(
                &[
                    (0..len).map(|t| (t as f64).sin() * 1e3 + 0.1).collect(),
                    (0..len).map(|t| 1.0 / (t as f64 + 3.0)).collect(),
                ],
                5.0,
                names.clone(),
            )
            .unwrap();
            Sample {
                id: id.into(),
                series,
                annotation: Some(annotation_from_pairs(&[(0, 0), (len / 2, 2)], 3).unwrap()),
                split,
            }
        };
        Dataset {
            samples: vec![mk("a", 12, Some(Split::Train)), mk("b", 9, None)],
            state_names: vec!["climb".into(), "cruise".into(), "land".into()],
            channel_names: names,
            sample_rate_hz: 5.0,
        }
    }

    #[test]
    fn dataset_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path(), LengthBounds { min: 1, max: 100 }).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn unlabeled_flight_file() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small_dataset();
        let path = dir.path().join("x.csv");
        write_flight_csv(&path, &ds.samples[0].series, None).unwrap();
        let (series, ann) = read_flight_csv(&path, 5.0, &ds.state_names).unwrap();
        assert!(ann.is_none());
        assert_eq!(series, ds.samples[0].series);
    }

    #[test]
    fn parse_error_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,a,b\n0,1,2\n0.2,1,oops\n").unwrap();
        match read_flight_csv(&path, 5.0, &[]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_state_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,a,b,state\n0,1,2,climb\n0.2,1,2,hover\n").unwrap();
        assert!(matches!(
            read_flight_csv(&path, 5.0, &["climb".to_string()]),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn manifest_requires_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        fs::write(&path, "{\"kind\":\"flight\",\"id\":\"a\",\"path\":\"a.csv\"}\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn length_bounds_apply_on_load() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&small_dataset(), dir.path()).unwrap();
        let ds = load_dataset(dir.path(), LengthBounds { min: 10, max: 100 }).unwrap();
        assert_eq!(ds.len(), 1);
        assert!(matches!(
            load_dataset(dir.path(), LengthBounds { min: 50, max: 100 }),
            Err(Error::EmptyDataset)
        ));
    }
}
