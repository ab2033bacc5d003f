//! Product-limit baselines and prediction metrics.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SurvivalDataset, TruncationMode};
use crate::error::{Error, Result};
use crate::grids::nearest_rank;
use crate::rng::fold_assignment;

/// Right-continuous nonincreasing step function, 1 before the first jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepCurve {
    pub fn at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    /// Left limit `S(t⁻)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s < t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KmTarget {
    Event,
    Censoring,
}

/// Product-limit estimator. With left truncation the risk set at `t` is
/// `{W ≤ t ≤ Y}`, otherwise `{Y ≥ t}`.
pub fn kaplan_meier(d: &SurvivalDataset, target: KmTarget) -> Result<StepCurve> {
    if d.truncation() == TruncationMode::Right {
        return Err(Error::InvalidArgument(
            "product-limit estimation needs untruncated or left-truncated data".into(),
        ));
    }
    let want = target == KmTarget::Event;
    let mut jumps: Vec<f64> = d.times_with_event(want);
    if jumps.is_empty() {
        return Err(Error::NoEvents);
    }
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();

    let y = d.follow_up();
    let w = d.entry();
    let ev = d.event();
    let mut values = Vec::with_capacity(jumps.len());
    let mut s = 1.0;
    for &t in &jumps {
        let mut at_risk = 0usize;
        let mut hits = 0usize;
        for i in 0..d.len() {
            if y[i] >= t && w[i] <= t {
                at_risk += 1;
                if y[i] == t && ev[i] == want {
                    hits += 1;
                }
            }
        }
        s *= 1.0 - hits as f64 / at_risk as f64;
        values.push(s);
    }
    Ok(StepCurve { times: jumps, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrierScore {
    pub score: f64,
    /// Subjects dropped because their weight denominator `Ĝ(Y⁻)` was zero.
    pub excluded: usize,
}

/// Inverse-probability-of-censoring weighted Brier score at landmark `t`:
///
/// ```text
/// (1/n) Σ [ S(t|Xᵢ)² 1(Yᵢ ≤ t, Δᵢ = 1) / G(Yᵢ⁻) + {1 − S(t|Xᵢ)}² 1(Yᵢ > t) / G(t) ]
/// ```
pub fn ipcw_brier(pred: &[f64], d: &SurvivalDataset, t: f64, g: &StepCurve) -> Result<BrierScore> {
    if pred.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            got: pred.len(),
        });
    }
    let g_t = g.at(t);
    if g_t <= 0.0 {
        return Err(Error::Undefined(format!("censoring survival is 0 at landmark {t}")));
    }
    let mut total = 0.0;
    let mut excluded = 0;
    for ((&s, &y), &e) in pred.iter().zip(d.follow_up()).zip(d.event()) {
        if y <= t {
            if e {
                let g_y = g.left_limit(y);
                if g_y > 0.0 {
                    total += s * s / g_y;
                } else {
                    excluded += 1;
                }
            }
        } else {
            total += (1.0 - s) * (1.0 - s) / g_t;
        }
    }
    Ok(BrierScore {
        score: total / d.len() as f64,
        excluded,
    })
}

pub fn relative_brier(method: f64, km: f64) -> Result<f64> {
    if !(km > 0.0) {
        return Err(Error::Undefined("reference Brier score is zero".into()));
    }
    Ok(method / km)
}

/// Evaluation grid for integrated error: 1000 evenly spaced points from 0.1 to 100.
pub fn mise_grid() -> Vec<f64> {
    (0..1000).map(|i| 0.1 + 99.9 * i as f64 / 999.0).collect()
}

/// Mean over subjects of `{Ŝ(t|xᵢ) − S(t|xᵢ)}²`.
pub fn mse_at(pred: &[f64], truth: impl Fn(ArrayView1<'_, f64>, f64) -> f64, x: ArrayView2<'_, f64>, t: f64) -> f64 {
    let n = pred.len().max(1) as f64;
    pred.iter()
        .zip(x.rows())
        .map(|(&p, row)| (p - truth(row, t)).powi(2))
        .sum::<f64>()
        / n
}

/// Mean over subjects and over `times` of the squared error; `pred` is
/// subjects × times.
pub fn mise(
    pred: ArrayView2<'_, f64>,
    truth: impl Fn(ArrayView1<'_, f64>, f64) -> f64,
    x: ArrayView2<'_, f64>,
    times: &[f64],
) -> f64 {
    let cells = (pred.nrows() * times.len()).max(1) as f64;
    let mut total = 0.0;
    for (prow, xrow) in pred.rows().into_iter().zip(x.rows()) {
        for (&p, &t) in prow.iter().zip(times) {
            total += (p - truth(xrow, t)).powi(2);
        }
    }
    total / cells
}

/// Landmark times: nearest-rank percentiles of the observed event times.
pub fn landmarks(d: &SurvivalDataset, percents: &[usize]) -> Result<Vec<f64>> {
    let mut ev = d.times_with_event(true);
    if ev.is_empty() {
        return Err(Error::NoEvents);
    }
    ev.sort_by(f64::total_cmp);
    percents
        .iter()
        .map(|&p| {
            if p == 0 || p > 100 {
                Err(Error::InvalidArgument(format!("landmark percentile {p} outside 1..=100")))
            } else {
                Ok(nearest_rank(&ev, p, 100))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub percents: Vec<usize>,
    pub landmarks: Vec<f64>,
    pub method: Vec<f64>,
    pub km: Vec<f64>,
    pub relative: Vec<f64>,
    pub excluded: Vec<usize>,
    /// Fold assignments redrawn because a training split had no events.
    pub reshuffles: usize,
    pub folds: Vec<usize>,
}

/// K-fold cross-validated IPCW Brier scores. `method(train, test_x, landmarks)`
/// returns survival predictions (test rows × landmarks). Out-of-fold
/// predictions are pooled and scored once against the censoring KM of the
/// full data, alongside the covariate-free KM fitted on each training split.
pub fn crossval_brier<M>(
    d: &SurvivalDataset,
    folds: usize,
    percents: &[usize],
    seed: u64,
    method: M,
) -> Result<CvReport>
where
    M: Fn(&SurvivalDataset, ArrayView2<'_, f64>, &[f64]) -> Result<Array2<f64>> + Sync,
{
    if d.truncation() != TruncationMode::None {
        return Err(Error::InvalidArgument(
            "cross-validated Brier scores are only defined here for right-censored data".into(),
        ));
    }
    let n = d.len();
    if folds < 2 || n < folds {
        return Err(Error::InvalidArgument(format!("cannot split {n} subjects into {folds} folds")));
    }
    let marks = landmarks(d, percents)?;
    let g = kaplan_meier(d, KmTarget::Censoring).unwrap_or(StepCurve {
        times: Vec::new(),
        values: Vec::new(),
    });

    let mut reshuffles = 0;
    let assignment = loop {
        let a = fold_assignment(n, folds, seed.wrapping_add(reshuffles as u64));
        let ok = (0..folds).all(|k| (0..n).any(|i| a[i] != k && d.event()[i]));
        if ok {
            break a;
        }
        reshuffles += 1;
        if reshuffles > 1000 {
            return Err(Error::NoEvents);
        }
    };

    let per_fold: Vec<(Vec<usize>, Array2<f64>, Vec<f64>)> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != k).collect();
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
            let train_d = d.subset(&train)?;
            let test_x = d.covariates().select(ndarray::Axis(0), &test);
            let pred = method(&train_d, test_x.view(), &marks)?;
            if pred.dim() != (test.len(), marks.len()) {
                return Err(Error::DimensionMismatch {
                    expected: marks.len(),
                    got: pred.ncols(),
                });
            }
            let km = kaplan_meier(&train_d, KmTarget::Event)?;
            let km_pred = marks.iter().map(|&t| km.at(t)).collect();
            Ok((test, pred, km_pred))
        })
        .collect::<Result<_>>()?;

    let mut method_pred = Array2::zeros((n, marks.len()));
    let mut km_pred = Array2::zeros((n, marks.len()));
    for (test, pred, km) in &per_fold {
        for (r, &i) in test.iter().enumerate() {
            for j in 0..marks.len() {
                method_pred[[i, j]] = pred[[r, j]];
                km_pred[[i, j]] = km[j];
            }
        }
    }
    let mut report = CvReport {
        percents: percents.to_vec(),
        landmarks: marks.clone(),
        method: Vec::new(),
        km: Vec::new(),
        relative: Vec::new(),
        excluded: Vec::new(),
        reshuffles,
        folds: assignment,
    };
    for (j, &t) in marks.iter().enumerate() {
        let m = ipcw_brier(&method_pred.column(j).to_vec(), d, t, &g)?;
        let k = ipcw_brier(&km_pred.column(j).to_vec(), d, t, &g)?;
        report.method.push(m.score);
        report.km.push(k.score);
        report.relative.push(relative_brier(m.score, k.score)?);
        report.excluded.push(m.excluded);
    }
    Ok(report)
}
