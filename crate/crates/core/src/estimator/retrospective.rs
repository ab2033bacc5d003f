use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{fit_with_pi, survival_path, Diagnostics, FitOptions, GlobalStackFit, GridConfig, Mapping, SurvivalCurveMatrix, Target};
use crate::data::{SurvivalDataset, TruncationMode};
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;

/// Fit on right-truncated data through time reversal: `S(t|x) = 1 − S̄(τ − t|x)`
/// where `S̄` is the global-stacking fit on the reversed sample, evaluated
/// right-continuously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrospectiveFit {
    pub tau: f64,
    /// Fit in reversed time. `π` is fixed at 1 because the reversed data have
    /// no censoring.
    #[serde(flatten)]
    pub reversed: GlobalStackFit,
}

/// `tau` defaults to the largest entry time. Grids are resolved on the
/// reversed data.
pub fn fit_retrospective(
    d: &SurvivalDataset,
    spec: &LearnerSpec,
    grids: &GridConfig,
    options: &FitOptions,
    tau: Option<f64>,
) -> Result<RetrospectiveFit> {
    if d.truncation() != TruncationMode::Right {
        return Err(Error::InvalidArgument(
            "the reverse-time fit needs right-truncated data".into(),
        ));
    }
    let tau = tau.unwrap_or_else(|| d.default_tau());
    let reversed = d.reverse_time(tau)?;
    let fit = fit_with_pi(&reversed, spec, grids, options, Some(1.0))?;
    Ok(RetrospectiveFit { tau, reversed: fit })
}

impl RetrospectiveFit {
    /// Original-scale times at which the curve jumps, ascending.
    pub fn default_times(&self) -> Vec<f64> {
        self.reversed.grids.approx.cuts().iter().rev().map(|&c| self.tau - c).collect()
    }

    /// Curves at `times` (default: the reflected approximation grid). Any
    /// time is accepted; the curve is 0 at and beyond `tau`.
    pub fn predict_curve(&self, x: ArrayView2<'_, f64>, times: Option<&[f64]>) -> Result<SurvivalCurveMatrix> {
        let inner = &self.reversed;
        if x.ncols() != inner.n_covariates() {
            return Err(Error::DimensionMismatch {
                expected: inner.n_covariates(),
                got: x.ncols(),
            });
        }
        let cuts = inner.grids.approx.cuts();
        // index into the reversed survival path (0 = before the first cut)
        let (times, positions): (Vec<f64>, Vec<usize>) = match times {
            Some(ts) => (
                ts.to_vec(),
                ts.iter()
                    .map(|&t| {
                        let s = self.tau - t;
                        if s < 0.0 {
                            0
                        } else {
                            inner.grids.approx.count_at_or_below(s)
                        }
                    })
                    .collect(),
            ),
            None => (self.default_times(), (1..=cuts.len()).rev().collect()),
        };
        let product = inner.options.mapping == Mapping::Product;
        let mut values = Array2::zeros((x.nrows(), times.len()));
        let mut diagnostics = Diagnostics::default();
        for (i, row) in x.rows().into_iter().enumerate() {
            let row = row.to_vec();
            let incs = inner.increments_for(&row, Target::Event, &mut diagnostics);
            let path = survival_path(&incs, product);
            for (j, &k) in positions.iter().enumerate() {
                let reversed = if k == 0 { 1.0 } else { path[k - 1] };
                let s = 1.0 - reversed;
                diagnostics.evaluated += 1;
                if !(0.0..=1.0).contains(&s) {
                    diagnostics.out_of_range += 1;
                }
                values[[i, j]] = s.clamp(0.0, 1.0);
            }
        }
        Ok(SurvivalCurveMatrix {
            times,
            values,
            diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reverse_time_product_limit() {
        // Y = (1, 2, 3), W = (4, 4, 3.5), tau = 4
        // reversed: Ȳ = (3, 2, 1), W̄ = (0, 0, 0.5)
        // risk sets at s = 1, 2, 3: 3, 2, 1  =>  S̄ = 2/3, 1/3, 0
        let d = SurvivalDataset::new(
            Array2::zeros((3, 1)),
            vec![1.0, 2.0, 3.0],
            vec![true; 3],
            vec![4.0, 4.0, 3.5],
            TruncationMode::Right,
        )
        .unwrap();
        let rev = d.reverse_time(4.0).unwrap();
        let grids = GridConfig::all_follow_up(&rev).unwrap();
        let opts = FitOptions {
            mapping: Mapping::Product,
            ..FitOptions::default()
        };
        let fit = fit_retrospective(&d, &LearnerSpec::Empirical, &grids, &opts, None).unwrap();
        let c = fit.predict_curve(d.covariates().view(), Some(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        // S(t) = 1 − S̄(4 − t): S̄(3) = 0, S̄(2) = 1/3, S̄(1) = 2/3, S̄(0) = 1
        let expected = [1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
        for (a, b) in c.values.row(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{:?}", c.values);
        }
        let defaults = fit.predict_curve(d.covariates().view(), None).unwrap();
        assert_eq!(defaults.times, vec![1.0, 2.0, 3.0]);
        assert!(defaults.values.row(0).windows(2).into_iter().all(|w| w[1] <= w[0]));
    }
}
