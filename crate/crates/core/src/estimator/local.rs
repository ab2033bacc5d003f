use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, SurvivalCurveMatrix};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::grids::TimeGrid;
use crate::learners::{self, FittedModel, LearnerSpec};
use crate::stacking::{stack_local, TimeBasis, TimeEncoder};

/// Discrete-time hazard model fitted on the person-period stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStackFit {
    pub covariates: Vec<String>,
    pub grid: TimeGrid,
    pub encoder: TimeEncoder,
    pub events_only: bool,
    pub learner: LearnerSpec,
    pub model: FittedModel,
}

pub fn fit_local(
    d: &SurvivalDataset,
    spec: &LearnerSpec,
    grid: &TimeGrid,
    basis: TimeBasis,
    events_only: bool,
    seed: u64,
) -> Result<LocalStackFit> {
    let encoder = TimeEncoder::new(basis, d.max_follow_up(), grid);
    let stack = stack_local(d, grid, &encoder, events_only)?;
    if stack.is_empty() {
        return Err(Error::InvalidGrid("no subject is at risk at any grid time".into()));
    }
    let model = learners::fit(spec, stack.features.view(), &stack.labels, stack.time_columns(), seed)?;
    Ok(LocalStackFit {
        covariates: d.covariate_names().to_vec(),
        grid: grid.clone(),
        encoder,
        events_only,
        learner: spec.clone(),
        model,
    })
}

impl LocalStackFit {
    /// Hazards `λ(t_j | x)` at the grid cuts.
    pub fn hazards(&self, x: &[f64]) -> Vec<f64> {
        let p = x.len();
        let mut buf = x.to_vec();
        buf.resize(p + self.encoder.width(), 0.0);
        self.grid
            .cuts()
            .iter()
            .map(|&t| {
                self.encoder.encode_into(t, &mut buf[p..]);
                self.model.predict_row(&buf)
            })
            .collect()
    }

    /// `S(t|x) = ∏_{t_j ≤ t} {1 − λ(t_j|x)}` at `times` (default: the grid).
    pub fn predict_curve(&self, x: ArrayView2<'_, f64>, times: Option<&[f64]>) -> Result<SurvivalCurveMatrix> {
        if x.ncols() != self.covariates.len() {
            return Err(Error::DimensionMismatch {
                expected: self.covariates.len(),
                got: x.ncols(),
            });
        }
        let times: Vec<f64> = times.map_or_else(|| self.grid.cuts().to_vec(), <[f64]>::to_vec);
        let positions: Vec<usize> = times.iter().map(|&t| self.grid.count_at_or_below(t)).collect();
        let rows: Vec<Vec<f64>> = (0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let mut s = 1.0;
                let path: Vec<f64> = self
                    .hazards(&x.row(i).to_vec())
                    .into_iter()
                    .map(|h| {
                        s *= 1.0 - h;
                        s
                    })
                    .collect();
                positions.iter().map(|&k| if k == 0 { 1.0 } else { path[k - 1] }).collect()
            })
            .collect();
        let mut values = Array2::zeros((rows.len(), times.len()));
        for (i, r) in rows.iter().enumerate() {
            values.row_mut(i).iter_mut().zip(r).for_each(|(a, b)| *a = *b);
        }
        let diagnostics = Diagnostics {
            evaluated: values.len(),
            ..Diagnostics::default()
        };
        Ok(SurvivalCurveMatrix {
            times,
            values,
            diagnostics,
        })
    }
}
