//! Pooled ("stacked") binary-regression datasets built from a survival
//! dataset and a time grid.
//!
//! Rows are ordered by grid index, then by subject index. Each row carries
//! the subject's covariates followed by the time-basis encoding of the grid
//! time.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{SurvivalDataset, TruncationMode};
use crate::error::{Error, Result};
use crate::grids::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeBasis {
    /// A single column `t / scale`.
    #[default]
    Continuous,
    /// One-hot indicator of the regression-grid cell containing `t`.
    Dummy,
}

impl std::str::FromStr for TimeBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(TimeBasis::Continuous),
            "dummy" => Ok(TimeBasis::Dummy),
            other => Err(Error::InvalidArgument(format!("unknown time basis `{other}`"))),
        }
    }
}

/// Encodes a time value into basis columns. The scale and the grid are
/// recorded so predictions reuse the exact training transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEncoder {
    pub basis: TimeBasis,
    pub scale: f64,
    pub cuts: Vec<f64>,
}

impl TimeEncoder {
    pub fn new(basis: TimeBasis, scale: f64, grid: &TimeGrid) -> Self {
        Self {
            basis,
            scale,
            cuts: grid.cuts().to_vec(),
        }
    }

    pub fn width(&self) -> usize {
        match self.basis {
            TimeBasis::Continuous => 1,
            TimeBasis::Dummy => self.cuts.len(),
        }
    }

    pub fn encode_into(&self, t: f64, out: &mut [f64]) {
        match self.basis {
            TimeBasis::Continuous => out[0] = t / self.scale,
            TimeBasis::Dummy => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let k = self.cuts.partition_point(|&c| c <= t);
                if k > 0 {
                    out[k - 1] = 1.0;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackOrigin {
    FStack,
    GStack,
    LocalStack,
}

#[derive(Debug, Clone)]
pub struct StackedDataset {
    pub features: Array2<f64>,
    pub labels: Vec<bool>,
    /// Subject index of each row.
    pub subject: Vec<usize>,
    /// Grid time of each row.
    pub time: Vec<f64>,
    pub grid: TimeGrid,
    pub encoder: TimeEncoder,
    pub origin: StackOrigin,
    /// Event value the stack was built from (absent for local stacks).
    pub stratum: Option<bool>,
    pub n_covariates: usize,
}

impl StackedDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn time_columns(&self) -> usize {
        self.encoder.width()
    }
}

struct Builder<'a> {
    data: &'a SurvivalDataset,
    encoder: &'a TimeEncoder,
    flat: Vec<f64>,
    labels: Vec<bool>,
    subject: Vec<usize>,
    time: Vec<f64>,
}

impl<'a> Builder<'a> {
    fn new(data: &'a SurvivalDataset, encoder: &'a TimeEncoder) -> Self {
        Self {
            data,
            encoder,
            flat: Vec::new(),
            labels: Vec::new(),
            subject: Vec::new(),
            time: Vec::new(),
        }
    }

    fn push(&mut self, i: usize, t: f64, label: bool) {
        self.flat.extend(self.data.covariate(i).iter());
        let start = self.flat.len();
        self.flat.resize(start + self.encoder.width(), 0.0);
        self.encoder.encode_into(t, &mut self.flat[start..]);
        self.labels.push(label);
        self.subject.push(i);
        self.time.push(t);
    }

    fn finish(self, grid: &TimeGrid, origin: StackOrigin, stratum: Option<bool>) -> StackedDataset {
        let p = self.data.n_covariates();
        let width = p + self.encoder.width();
        let features = Array2::from_shape_vec((self.labels.len(), width), self.flat)
            .expect("row width is constant");
        StackedDataset {
            features,
            labels: self.labels,
            subject: self.subject,
            time: self.time,
            grid: grid.clone(),
            encoder: self.encoder.clone(),
            origin,
            stratum,
            n_covariates: p,
        }
    }
}

/// Cumulative-outcome stack for `F_δ`: every subject with `Δ = δ` at every
/// grid time, labelled `1(Y ≤ t)`.
pub fn stack_f(data: &SurvivalDataset, delta: bool, grid: &TimeGrid, encoder: &TimeEncoder) -> Result<StackedDataset> {
    let members: Vec<usize> = (0..data.len()).filter(|&i| data.event()[i] == delta).collect();
    if members.is_empty() {
        return Err(Error::EmptyStratum(u8::from(delta)));
    }
    let mut b = Builder::new(data, encoder);
    for &t in grid.cuts() {
        for &i in &members {
            b.push(i, t, data.follow_up()[i] <= t);
        }
    }
    Ok(b.finish(grid, StackOrigin::FStack, Some(delta)))
}

/// Entry-time stack for `G_δ`: at each grid time, subjects with `Δ = δ` still
/// under follow-up (`Y ≥ t`), labelled `1(W ≤ t)`.
pub fn stack_g(data: &SurvivalDataset, delta: bool, grid: &TimeGrid, encoder: &TimeEncoder) -> Result<StackedDataset> {
    if data.truncation() == TruncationMode::Right {
        return Err(Error::InvalidArgument(
            "entry-time stacks need untruncated or left-truncated data".into(),
        ));
    }
    let mut b = Builder::new(data, encoder);
    for &t in grid.cuts() {
        for i in 0..data.len() {
            if data.event()[i] == delta && data.follow_up()[i] >= t {
                b.push(i, t, data.entry()[i] <= t);
            }
        }
    }
    if b.labels.is_empty() {
        return Err(Error::EmptyStratum(u8::from(delta)));
    }
    Ok(b.finish(grid, StackOrigin::GStack, Some(delta)))
}

/// Discrete-hazard (person-period) stack: at each grid time `t_j`, subjects
/// at risk (`Y ≥ t_j` and `W ≤ t_j`) labelled `1(t_j ≤ Y < t_{j+1})`, with
/// `t_{k+1} = ∞`. With `events_only` the label additionally requires `Δ = 1`.
pub fn stack_local(
    data: &SurvivalDataset,
    grid: &TimeGrid,
    encoder: &TimeEncoder,
    events_only: bool,
) -> Result<StackedDataset> {
    if data.truncation() == TruncationMode::Right {
        return Err(Error::InvalidArgument(
            "local stacks need untruncated or left-truncated data".into(),
        ));
    }
    let cuts = grid.cuts();
    let mut b = Builder::new(data, encoder);
    for (j, &t) in cuts.iter().enumerate() {
        let next = cuts.get(j + 1).copied().unwrap_or(f64::INFINITY);
        for i in 0..data.len() {
            let y = data.follow_up()[i];
            if y >= t && data.entry()[i] <= t {
                let exits = y < next;
                b.push(i, t, exits && (!events_only || data.event()[i]));
            }
        }
    }
    Ok(b.finish(grid, StackOrigin::LocalStack, None))
}

/// Writes `subject_id` (1-based), `time`, `label`, then the feature columns.
pub fn write_stack_csv<W: Write>(stack: &StackedDataset, names: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subject_id".to_string(), "time".into(), "label".into()];
    header.extend(names.iter().cloned());
    match stack.encoder.basis {
        TimeBasis::Continuous => header.push("time_scaled".into()),
        TimeBasis::Dummy => header.extend((1..=stack.encoder.width()).map(|k| format!("time_cell_{k}"))),
    }
    w.write_record(&header)?;
    for (r, row) in stack.features.rows().into_iter().enumerate() {
        let mut rec = vec![
            (stack.subject[r] + 1).to_string(),
            stack.time[r].to_string(),
            u8::from(stack.labels[r]).to_string(),
        ];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<stack output>".into(),
        source,
    })?;
    Ok(())
}
