//! Survival datasets: validation, CSV ingestion, and the time-reversal and
//! event-flip transforms.
//!
//! A dataset holds one row per subject: covariates `x`, follow-up time `Y`,
//! event indicator `Δ`, and entry time `W`. The truncation mode fixes which
//! sampling criterion the rows satisfy:
//!
//! - `None`: `W = 0` for everyone.
//! - `Left` (delayed entry): `W ≤ Y`.
//! - `Right` (retrospective sampling): `W ≥ Y` and every subject has an event.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationMode {
    None,
    Left,
    Right,
}

impl std::str::FromStr for TruncationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TruncationMode::None),
            "left" => Ok(TruncationMode::Left),
            "right" => Ok(TruncationMode::Right),
            other => Err(Error::InvalidArgument(format!(
                "unknown truncation mode `{other}` (expected none, left or right)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    covariates: Array2<f64>,
    covariate_names: Vec<String>,
    follow_up: Vec<f64>,
    event: Vec<bool>,
    entry: Vec<f64>,
    truncation: TruncationMode,
}

impl SurvivalDataset {
    /// Builds a dataset and checks every invariant of the truncation mode.
    pub fn new(
        covariates: Array2<f64>,
        follow_up: Vec<f64>,
        event: Vec<bool>,
        entry: Vec<f64>,
        truncation: TruncationMode,
    ) -> Result<Self> {
        let names = (1..=covariates.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(covariates, names, follow_up, event, entry, truncation)
    }

    pub fn with_names(
        covariates: Array2<f64>,
        covariate_names: Vec<String>,
        follow_up: Vec<f64>,
        event: Vec<bool>,
        entry: Vec<f64>,
        truncation: TruncationMode,
    ) -> Result<Self> {
        let n = follow_up.len();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no subjects".into()));
        }
        if covariates.nrows() != n || event.len() != n || entry.len() != n {
            return Err(Error::InvalidDataset(format!(
                "column lengths disagree: {} covariate rows, {} times, {} events, {} entries",
                covariates.nrows(),
                n,
                event.len(),
                entry.len()
            )));
        }
        if covariate_names.len() != covariates.ncols() {
            return Err(Error::InvalidDataset(
                "covariate name count does not match covariate columns".into(),
            ));
        }
        for i in 0..n {
            let row = i + 1;
            let bad = |reason: String| Err(Error::InvalidRow { row, reason });
            if covariates.row(i).iter().any(|v| !v.is_finite()) {
                return bad("non-finite covariate".into());
            }
            let (y, w) = (follow_up[i], entry[i]);
            if !y.is_finite() || y <= 0.0 {
                return bad(format!("follow-up time must be positive and finite, got {y}"));
            }
            if !w.is_finite() || w < 0.0 {
                return bad(format!("entry time must be nonnegative and finite, got {w}"));
            }
            match truncation {
                TruncationMode::None if w != 0.0 => {
                    return bad(format!("entry time {w} must be 0 without truncation"));
                }
                TruncationMode::Left if w > y => {
                    return bad(format!("entry time {w} exceeds follow-up time {y}"));
                }
                TruncationMode::Right if w < y => {
                    return bad(format!(
                        "entry time {w} is below follow-up time {y} under right truncation"
                    ));
                }
                TruncationMode::Right if !event[i] => {
                    return bad("right-truncated data must have an event for every subject".into());
                }
                _ => {}
            }
        }
        Ok(Self {
            covariates,
            covariate_names,
            follow_up,
            event,
            entry,
            truncation,
        })
    }

    /// Untruncated dataset (all entry times zero).
    pub fn right_censored(covariates: Array2<f64>, follow_up: Vec<f64>, event: Vec<bool>) -> Result<Self> {
        let entry = vec![0.0; follow_up.len()];
        Self::new(covariates, follow_up, event, entry, TruncationMode::None)
    }

    pub fn len(&self) -> usize {
        self.follow_up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.follow_up.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn covariate(&self, i: usize) -> ArrayView1<'_, f64> {
        self.covariates.row(i)
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn follow_up(&self) -> &[f64] {
        &self.follow_up
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn entry(&self) -> &[f64] {
        &self.entry
    }

    pub fn truncation(&self) -> TruncationMode {
        self.truncation
    }

    pub fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    pub fn max_follow_up(&self) -> f64 {
        self.follow_up.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_entry(&self) -> f64 {
        self.entry.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Follow-up times of subjects whose event indicator equals `event`.
    pub fn times_with_event(&self, event: bool) -> Vec<f64> {
        self.follow_up
            .iter()
            .zip(&self.event)
            .filter(|(_, &e)| e == event)
            .map(|(&y, _)| y)
            .collect()
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let covariates = self.covariates.select(Axis(0), indices);
        let pick = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self::with_names(
            covariates,
            self.covariate_names.clone(),
            pick(&self.follow_up),
            indices.iter().map(|&i| self.event[i]).collect(),
            pick(&self.entry),
            self.truncation,
        )
    }

    /// Same subjects with the event indicator complemented.
    ///
    /// Fitting on the flipped data targets the censoring distribution.
    pub fn flip_events(&self) -> Result<Self> {
        if self.truncation == TruncationMode::Right {
            return Err(Error::InvalidArgument(
                "event flipping requires untruncated or left-truncated data".into(),
            ));
        }
        let mut out = self.clone();
        out.event.iter_mut().for_each(|e| *e = !*e);
        Ok(out)
    }

    /// Reverses the time axis around `tau`: `Y' = tau - Y`, `W' = tau - W`.
    ///
    /// Right-truncated data becomes left-truncated with every subject an
    /// event. The map is its own inverse, so left-truncated data in which
    /// every subject has an event is mapped back to right truncation.
    pub fn reverse_time(&self, tau: f64) -> Result<Self> {
        let target = match self.truncation {
            TruncationMode::Right => {
                if !(tau >= self.max_entry()) {
                    return Err(Error::InvalidArgument(format!(
                        "tau = {tau} is below the largest entry time {}",
                        self.max_entry()
                    )));
                }
                TruncationMode::Left
            }
            TruncationMode::Left if self.event.iter().all(|&e| e) => {
                if !(tau > self.max_follow_up()) {
                    return Err(Error::InvalidArgument(format!(
                        "tau = {tau} must exceed the largest follow-up time {}",
                        self.max_follow_up()
                    )));
                }
                TruncationMode::Right
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "time reversal requires right-truncated data (or its all-event left-truncated image)"
                        .into(),
                ))
            }
        };
        let follow_up = self.follow_up.iter().map(|&y| tau - y).collect::<Vec<_>>();
        if let Some(i) = follow_up.iter().position(|&y| y <= 0.0) {
            return Err(Error::InvalidRow {
                row: i + 1,
                reason: format!("reversed follow-up time tau - Y = {} is not positive", follow_up[i]),
            });
        }
        Self::with_names(
            self.covariates.clone(),
            self.covariate_names.clone(),
            follow_up,
            vec![true; self.len()],
            self.entry.iter().map(|&w| tau - w).collect(),
            target,
        )
    }

    /// Default reversal point for right-truncated data: the largest entry time.
    pub fn default_tau(&self) -> f64 {
        self.max_entry()
    }
}

/// Column mapping for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub time: String,
    pub event: String,
    pub entry: String,
    /// Columns to drop (for example a subject identifier).
    pub ignore: Vec<String>,
    /// Forces the truncation mode; inferred from the entry column otherwise.
    pub truncation: Option<TruncationMode>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            event: "event".into(),
            entry: "entry".into(),
            ignore: Vec::new(),
            truncation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub rows_read: usize,
    /// Rows removed because at least one cell was missing.
    pub rows_dropped: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan" | "null")
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<(SurvivalDataset, LoadReport)> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_csv(&text, schema)
}

/// Parses CSV text with a header row. Rows with any missing cell are dropped
/// and counted; every other malformed cell is an error.
pub fn parse_csv(text: &str, schema: &CsvSchema) -> Result<(SurvivalDataset, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let time_col = find(&schema.time).ok_or_else(|| Error::MissingColumn(schema.time.clone()))?;
    let event_col = find(&schema.event).ok_or_else(|| Error::MissingColumn(schema.event.clone()))?;
    let entry_col = find(&schema.entry);
    if entry_col.is_none() && matches!(schema.truncation, Some(m) if m != TruncationMode::None) {
        return Err(Error::MissingColumn(schema.entry.clone()));
    }
    let covariate_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != time_col && j != event_col && Some(j) != entry_col)
        .filter(|&j| !schema.ignore.contains(&headers[j]))
        .collect();

    let mut report = LoadReport::default();
    let mut follow_up = Vec::new();
    let mut event = Vec::new();
    let mut entry = Vec::new();
    let mut flat = Vec::new();
    let mut file_rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = k + 1;
        report.rows_read += 1;
        let used = [Some(time_col), Some(event_col), entry_col]
            .into_iter()
            .flatten()
            .chain(covariate_cols.iter().copied());
        if used.clone().any(|j| record.get(j).is_none_or(is_missing)) {
            report.rows_dropped += 1;
            continue;
        }
        let num = |j: usize| -> Result<f64> {
            let cell = record.get(j).unwrap_or("");
            cell.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
                row,
                column: headers[j].clone(),
                value: cell.to_owned(),
            })
        };
        file_rows.push(row);
        follow_up.push(num(time_col)?);
        let e = num(event_col)?;
        if e != 0.0 && e != 1.0 {
            return Err(Error::InvalidRow {
                row,
                reason: format!("event indicator must be 0 or 1, got {e}"),
            });
        }
        event.push(e == 1.0);
        entry.push(match entry_col {
            Some(j) => num(j)?,
            None => 0.0,
        });
        for &j in &covariate_cols {
            flat.push(num(j)?);
        }
    }
    if follow_up.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "no complete rows ({} read, {} dropped for missing values)",
            report.rows_read, report.rows_dropped
        )));
    }
    let truncation = schema
        .truncation
        .unwrap_or_else(|| infer_truncation(&follow_up, &event, &entry));
    let covariates = Array2::from_shape_vec((follow_up.len(), covariate_cols.len()), flat)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let names = covariate_cols.iter().map(|&j| headers[j].clone()).collect();
    let data = SurvivalDataset::with_names(covariates, names, follow_up, event, entry, truncation)
        .map_err(|e| match e {
            // validator rows count retained records; report the file row
            Error::InvalidRow { row, reason } => Error::InvalidRow {
                row: file_rows[row - 1],
                reason,
            },
            other => other,
        })?;
    Ok((data, report))
}

fn infer_truncation(follow_up: &[f64], event: &[bool], entry: &[f64]) -> TruncationMode {
    if entry.iter().all(|&w| w == 0.0) {
        return TruncationMode::None;
    }
    let all_after = follow_up.iter().zip(entry).all(|(&y, &w)| w >= y);
    let some_strict = follow_up.iter().zip(entry).any(|(&y, &w)| w > y);
    if all_after && some_strict && event.iter().all(|&e| e) {
        TruncationMode::Right
    } else {
        TruncationMode::Left
    }
}

/// Writes the dataset as CSV. The entry column is emitted unless the data
/// are untruncated.
pub fn write_csv<W: Write>(data: &SurvivalDataset, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let with_entry = data.truncation() != TruncationMode::None;
    let mut header: Vec<String> = Vec::new();
    if with_entry {
        header.push("entry".into());
    }
    header.push("time".into());
    header.push("event".into());
    header.extend(data.covariate_names().iter().cloned());
    writer.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if with_entry {
            rec.push(data.entry()[i].to_string());
        }
        rec.push(data.follow_up()[i].to_string());
        rec.push(u8::from(data.event()[i]).to_string());
        rec.extend(data.covariate(i).iter().map(|v| v.to_string()));
        writer.write_record(&rec)?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}

pub fn save_csv(data: &SurvivalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(data, std::io::BufWriter::new(file))
}

/// Reads the named covariate columns, in the given order, from CSV text.
/// Other columns are ignored. A missing or non-numeric cell is an error.
pub fn parse_covariates(text: &str, names: &[String]) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let cols = names
        .iter()
        .map(|n| headers.iter().position(|h| h == n).ok_or_else(|| Error::MissingColumn(n.clone())))
        .collect::<Result<Vec<usize>>>()?;
    let mut flat = Vec::new();
    let mut rows = 0;
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        for &j in &cols {
            let cell = record.get(j).unwrap_or("");
            let v = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite());
            flat.push(v.ok_or_else(|| Error::NonNumeric {
                row: k + 1,
                column: headers[j].clone(),
                value: cell.to_owned(),
            })?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.len()), flat).map_err(|e| Error::InvalidDataset(e.to_string()))
}

pub fn load_covariates(path: impl AsRef<Path>, names: &[String]) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_covariates(&text, names)
}
