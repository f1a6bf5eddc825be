//! Reader for the UCI epileptic-seizure-recognition CSV layout: an optional
//! row-identifier column, 178 signal values, and a label in 1..=5 where 1
//! marks seizure activity.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rbfihmm::classifier::{SegmentDataset, NEGATIVE, POSITIVE};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const SEGMENT_LEN: usize = 178;
pub const SAMPLING_RATE: f64 = 173.61;
pub const PSEUDO_SUBJECTS: usize = 100;
pub const SEIZURE_LABEL: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EegDataset {
    pub id_column: Option<String>,
    pub value_columns: Vec<String>,
    pub label_column: String,
    /// Empty strings when there is no id column.
    pub ids: Vec<String>,
    pub segments: Vec<Vec<f64>>,
    /// Original labels, 1..=5.
    pub labels: Vec<u8>,
    pub subjects: Vec<u32>,
    /// True when subjects were derived from contiguous row blocks.
    pub subject_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub rows: usize,
    /// Rows per original label 1..=5.
    pub original_class_counts: [usize; 5],
    pub seizure_rows: usize,
    pub non_seizure_rows: usize,
    pub subjects: usize,
    pub subject_fallback: bool,
    pub subject_source: String,
}

impl EegDataset {
    /// Seizure → [`POSITIVE`], everything else merged into [`NEGATIVE`].
    pub fn merged_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| if l == SEIZURE_LABEL { POSITIVE } else { NEGATIVE }).collect()
    }

    pub fn to_segments(&self) -> SegmentDataset {
        SegmentDataset {
            segments: self.segments.clone(),
            labels: self.merged_labels(),
            subjects: self.subjects.clone(),
            sampling_rate: SAMPLING_RATE,
        }
    }

    pub fn report(&self) -> ValidationReport {
        let mut counts = [0usize; 5];
        for &l in &self.labels {
            counts[(l - 1) as usize] += 1;
        }
        let mut subjects = self.subjects.clone();
        subjects.sort_unstable();
        subjects.dedup();
        let source = match (&self.id_column, self.subject_fallback) {
            (Some(c), false) => format!("id column '{c}'"),
            _ => format!("FALLBACK: {PSEUDO_SUBJECTS} pseudo-subjects from contiguous row blocks"),
        };
        ValidationReport {
            rows: self.labels.len(),
            original_class_counts: counts,
            seizure_rows: counts[0],
            non_seizure_rows: self.labels.len() - counts[0],
            subjects: subjects.len(),
            subject_fallback: self.subject_fallback,
            subject_source: source,
        }
    }
}

/// Recording key of a UCI row id such as `X21.V1.791` (chunk 21 of
/// recording `V1.791`); other ids are used whole.
pub fn subject_key(id: &str) -> &str {
    if let Some(rest) = id.strip_prefix('X') {
        if let Some((chunk, tail)) = rest.split_once('.') {
            if !chunk.is_empty() && chunk.bytes().all(|b| b.is_ascii_digit()) && !tail.is_empty() {
                return tail;
            }
        }
    }
    id
}

fn pseudo_subjects(n: usize) -> Vec<u32> {
    (0..n).map(|i| (i * PSEUDO_SUBJECTS / n.max(1)) as u32).collect()
}

pub fn ingest_uci_eeg(path: &Path, label_column: &str, id_column: Option<&str>) -> Result<EegDataset> {
    if !path.exists() {
        return Err(CliError::MissingInput(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| CliError::InvalidInput { path: path.to_path_buf(), message: e.to_string() })?;
    read_uci_eeg(file, label_column, id_column)
}

pub fn read_uci_eeg<R: Read>(input: R, label_column: &str, id_column: Option<&str>) -> Result<EegDataset> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::DatasetSchema(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| CliError::DatasetSchema(format!("missing label column '{label_column}'")))?;
    let id_idx = match id_column {
        Some(c) => Some(header.iter().position(|h| h == c).ok_or_else(|| CliError::DatasetSchema(format!("missing id column '{c}'")))?),
        None => None,
    };
    let value_idx: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx && Some(i) != id_idx).collect();
    if value_idx.len() != SEGMENT_LEN {
        return Err(CliError::DatasetSchema(format!("expected {SEGMENT_LEN} value columns, header has {}", value_idx.len())));
    }
    let mut ds = EegDataset {
        id_column: id_column.map(str::to_string),
        value_columns: value_idx.iter().map(|&i| header[i].clone()).collect(),
        label_column: label_column.to_string(),
        ids: vec![],
        segments: vec![],
        labels: vec![],
        subjects: vec![],
        subject_fallback: id_column.is_none(),
    };
    for (k, record) in reader.records().enumerate() {
        // data rows are numbered from 1, the header excluded
        let row = k + 1;
        let record = record.map_err(|e| CliError::DatasetRow { row, message: e.to_string() })?;
        if record.len() != header.len() {
            return Err(CliError::DatasetRow {
                row,
                message: format!("expected {} fields ({SEGMENT_LEN} values), found {}", header.len(), record.len()),
            });
        }
        let mut values = Vec::with_capacity(SEGMENT_LEN);
        for &i in &value_idx {
            let v: f64 = record[i].trim().parse().map_err(|_| CliError::DatasetRow {
                row,
                message: format!("column '{}' is not a number: '{}'", header[i], &record[i]),
            })?;
            if !v.is_finite() {
                return Err(CliError::DatasetRow { row, message: format!("column '{}' is not finite", header[i]) });
            }
            values.push(v);
        }
        let label: u8 = record[label_idx]
            .trim()
            .parse()
            .ok()
            .filter(|l| (1..=5).contains(l))
            .ok_or_else(|| CliError::DatasetRow { row, message: format!("label '{}' not in 1..5", &record[label_idx]) })?;
        ds.ids.push(id_idx.map(|i| record[i].to_string()).unwrap_or_default());
        ds.segments.push(values);
        ds.labels.push(label);
    }
    if ds.labels.is_empty() {
        return Err(CliError::DatasetSchema("no data rows".into()));
    }
    ds.subjects = match id_idx {
        Some(_) => {
            let mut index: HashMap<&str, u32> = HashMap::new();
            ds.ids
                .iter()
                .map(|id| {
                    let next = index.len() as u32;
                    *index.entry(subject_key(id)).or_insert(next)
                })
                .collect()
        }
        None => pseudo_subjects(ds.labels.len()),
    };
    Ok(ds)
}

/// Writes the dataset back in the same layout: id column (if any), values,
/// label. Values use the shortest representation that parses back exactly.
pub fn write_uci_eeg<W: Write>(ds: &EegDataset, out: W) -> Result<()> {
    let err = |e: csv::Error| CliError::Output { path: "<csv>".into(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::new();
    if let Some(c) = &ds.id_column {
        header.push(c);
    }
    header.extend(ds.value_columns.iter().map(String::as_str));
    header.push(&ds.label_column);
    w.write_record(&header).map_err(err)?;
    for i in 0..ds.labels.len() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if ds.id_column.is_some() {
            rec.push(ds.ids[i].clone());
        }
        rec.extend(ds.segments[i].iter().map(|v| v.to_string()));
        rec.push(ds.labels[i].to_string());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Output { path: "<csv>".into(), message: e.to_string() })?;
    Ok(())
}
