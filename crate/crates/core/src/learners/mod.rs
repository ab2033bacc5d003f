//! Binary-probability learners.
//!
//! Every learner maps a real feature matrix and binary labels to a
//! [`FittedModel`] whose predictions lie in `[0, 1]`. Degenerate label
//! vectors (all 0 or all 1) produce a clipped constant model for every
//! parametric learner.

mod empirical;
mod gbt;
mod linalg;
mod logistic;
mod nnls;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

pub use empirical::EmpiricalModel;
pub use gbt::{fit_gbt, GbtFit, GbtModel, GbtParams};
pub use logistic::{irls_logistic, logistic_objective, IrlsFit, DEFAULT_RIDGE};
pub use nnls::{nnls, residual_sq};

use crate::error::{Error, Result};
use crate::rng::fold_assignment;

/// Probabilities are kept inside `[PROB_CLIP, 1 - PROB_CLIP]` before any
/// log or logit.
pub const PROB_CLIP: f64 = 1e-12;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    ConstantMean,
    Logistic,
    LogisticInteractions,
    Gbt(GbtParams),
    SuperLearner { folds: usize, members: Vec<LearnerSpec> },
    /// Covariate-blind empirical frequencies per time key.
    Empirical,
}

impl LearnerSpec {
    /// Shrinkage 0.01 with the depth/size combinations used as boosting presets.
    pub fn gbt_presets() -> Vec<LearnerSpec> {
        [250, 500, 1000]
            .into_iter()
            .flat_map(|trees| {
                [1, 2].into_iter().map(move |max_depth| {
                    LearnerSpec::Gbt(GbtParams {
                        trees,
                        max_depth,
                        shrinkage: 0.01,
                    })
                })
            })
            .collect()
    }

    pub fn default_library() -> Vec<LearnerSpec> {
        vec![
            LearnerSpec::ConstantMean,
            LearnerSpec::Logistic,
            LearnerSpec::LogisticInteractions,
            LearnerSpec::Gbt(GbtParams {
                trees: 250,
                max_depth: 1,
                shrinkage: 0.01,
            }),
            LearnerSpec::Gbt(GbtParams::default()),
        ]
    }

    pub fn default_super_learner() -> LearnerSpec {
        LearnerSpec::SuperLearner {
            folds: 5,
            members: Self::default_library(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Gbt(p) => {
                if p.trees == 0 {
                    return Err(Error::InvalidLearner("gbt needs at least one tree".into()));
                }
                if p.max_depth == 0 {
                    return Err(Error::InvalidLearner("gbt max_depth must be at least 1".into()));
                }
                if !(p.shrinkage > 0.0 && p.shrinkage <= 1.0) {
                    return Err(Error::InvalidLearner(format!(
                        "gbt shrinkage {} must lie in (0, 1]",
                        p.shrinkage
                    )));
                }
                Ok(())
            }
            LearnerSpec::SuperLearner { folds, members } => {
                if *folds < 2 {
                    return Err(Error::InvalidLearner("super learner needs at least 2 folds".into()));
                }
                if members.is_empty() {
                    return Err(Error::InvalidLearner("super learner needs at least one member".into()));
                }
                members.iter().try_for_each(LearnerSpec::validate)
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    /// Accepts `mean`, `logistic`, `logistic_interactions`, `empirical`,
    /// `gbt[:TREES[:DEPTH[:SHRINKAGE]]]` and
    /// `super_learner[:FOLDS][(m1+m2+...)]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidLearner(format!("cannot parse learner `{s}`"));
        let spec = match s {
            "mean" | "constant_mean" => LearnerSpec::ConstantMean,
            "logistic" => LearnerSpec::Logistic,
            "logistic_interactions" => LearnerSpec::LogisticInteractions,
            "empirical" => LearnerSpec::Empirical,
            _ if s.starts_with("gbt") => {
                let mut params = GbtParams::default();
                let mut parts = s.split(':').skip(1);
                if let Some(v) = parts.next() {
                    params.trees = v.parse().map_err(|_| bad())?;
                }
                if let Some(v) = parts.next() {
                    params.max_depth = v.parse().map_err(|_| bad())?;
                }
                if let Some(v) = parts.next() {
                    params.shrinkage = v.parse().map_err(|_| bad())?;
                }
                if parts.next().is_some() || !(s == "gbt" || s.starts_with("gbt:")) {
                    return Err(bad());
                }
                LearnerSpec::Gbt(params)
            }
            _ if s.starts_with("super_learner") => {
                let rest = &s["super_learner".len()..];
                let (head, members) = match rest.find('(') {
                    Some(open) => {
                        let inner = rest[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                        let members = inner
                            .split('+')
                            .map(str::parse)
                            .collect::<Result<Vec<LearnerSpec>>>()?;
                        (&rest[..open], members)
                    }
                    None => (rest, Self::default_library()),
                };
                let folds = match head.strip_prefix(':') {
                    Some(f) => f.parse().map_err(|_| bad())?,
                    None if head.is_empty() => 5,
                    None => return Err(bad()),
                };
                LearnerSpec::SuperLearner { folds, members }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::ConstantMean => f.write_str("mean"),
            LearnerSpec::Logistic => f.write_str("logistic"),
            LearnerSpec::LogisticInteractions => f.write_str("logistic_interactions"),
            LearnerSpec::Empirical => f.write_str("empirical"),
            LearnerSpec::Gbt(p) => write!(f, "gbt:{}:{}:{}", p.trees, p.max_depth, p.shrinkage),
            LearnerSpec::SuperLearner { folds, members } => {
                write!(f, "super_learner:{folds}(")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Constant {
        probability: f64,
    },
    Logistic {
        coefficients: Vec<f64>,
        interactions: bool,
    },
    Gbt(GbtModel),
    Ensemble {
        weights: Vec<f64>,
        members: Vec<FittedModel>,
    },
    Empirical(EmpiricalModel),
}

/// A fitted, immutable probability model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub feature_dimension: usize,
    pub state: ModelState,
}

impl FittedModel {
    pub fn constant(probability: f64, feature_dimension: usize) -> Self {
        Self {
            feature_dimension,
            state: ModelState::Constant { probability },
        }
    }

    /// Probability for one feature row. The row length is not checked.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let p = match &self.state {
            ModelState::Constant { probability } => *probability,
            ModelState::Logistic {
                coefficients,
                interactions,
            } => {
                let mut expanded = Vec::with_capacity(coefficients.len());
                expanded.push(1.0);
                logistic::expand_into(row, *interactions, &mut expanded);
                sigmoid(expanded.iter().zip(coefficients).map(|(a, b)| a * b).sum())
            }
            ModelState::Gbt(model) => model.predict(row),
            ModelState::Ensemble { weights, members } => weights
                .iter()
                .zip(members)
                .map(|(w, m)| w * m.predict_row(row))
                .sum(),
            ModelState::Empirical(model) => model.predict(row),
        };
        p.clamp(0.0, 1.0)
    }

    pub fn predict(&self, features: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if features.ncols() != self.feature_dimension {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dimension,
                got: features.ncols(),
            });
        }
        let mut buf = vec![0.0; features.ncols()];
        Ok(features
            .rows()
            .into_iter()
            .map(|r| {
                buf.iter_mut().zip(r.iter()).for_each(|(b, &v)| *b = v);
                self.predict_row(&buf)
            })
            .collect())
    }
}

/// Fits `spec` to `(features, labels)`. The trailing `time_columns` columns
/// of `features` hold the time basis; only the empirical learner uses this.
pub fn fit(
    spec: &LearnerSpec,
    features: ArrayView2<'_, f64>,
    labels: &[bool],
    time_columns: usize,
    seed: u64,
) -> Result<FittedModel> {
    spec.validate()?;
    let (n, dim) = features.dim();
    if n != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{n} feature rows but {} labels",
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("cannot fit a learner on zero rows".into()));
    }
    if time_columns > dim {
        return Err(Error::InvalidArgument("time columns exceed feature dimension".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if matches!(spec, LearnerSpec::Empirical) {
        let rows: Vec<Vec<f64>> = features.rows().into_iter().map(|r| r.to_vec()).collect();
        return Ok(FittedModel {
            feature_dimension: dim,
            state: ModelState::Empirical(EmpiricalModel::fit(
                rows.iter().map(Vec::as_slice),
                labels,
                time_columns,
            )),
        });
    }
    if positives == 0 || positives == n {
        let p = if positives == 0 { PROB_CLIP } else { 1.0 - PROB_CLIP };
        return Ok(FittedModel::constant(p, dim));
    }
    let state = match spec {
        LearnerSpec::ConstantMean => ModelState::Constant {
            probability: positives as f64 / n as f64,
        },
        LearnerSpec::Logistic | LearnerSpec::LogisticInteractions => {
            let interactions = matches!(spec, LearnerSpec::LogisticInteractions);
            let design = logistic::Design::new(features, interactions);
            let fit = logistic::irls_design(&design, labels, DEFAULT_RIDGE);
            ModelState::Logistic {
                coefficients: fit.coefficients,
                interactions,
            }
        }
        LearnerSpec::Gbt(params) => ModelState::Gbt(fit_gbt(features, labels, params).model),
        LearnerSpec::SuperLearner { folds, members } => {
            return fit_super_learner(members, *folds, features, labels, time_columns, seed)
                .map(|sl| sl.model)
        }
        LearnerSpec::Empirical => unreachable!("handled above"),
    };
    Ok(FittedModel {
        feature_dimension: dim,
        state,
    })
}

#[derive(Debug, Clone)]
pub struct SuperLearnerFit {
    pub model: FittedModel,
    /// Convex weights over `members`, in member order.
    pub weights: Vec<f64>,
    /// Cross-validated mean squared error of each member.
    pub cv_risk: Vec<f64>,
}

/// Cross-validated convex combination of `members`: out-of-fold predictions
/// are regressed on the labels by nonnegative least squares, the weights are
/// normalized to sum to one, and members with positive weight are refitted
/// on all rows.
pub fn fit_super_learner(
    members: &[LearnerSpec],
    folds: usize,
    features: ArrayView2<'_, f64>,
    labels: &[bool],
    time_columns: usize,
    seed: u64,
) -> Result<SuperLearnerFit> {
    if members.is_empty() {
        return Err(Error::InvalidLearner("super learner needs at least one member".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidLearner("super learner needs at least 2 folds".into()));
    }
    let (n, dim) = features.dim();
    if n < folds {
        return Err(Error::InvalidArgument(format!("{n} rows cannot be split into {folds} folds")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == n {
        let p = if positives == 0 { PROB_CLIP } else { 1.0 - PROB_CLIP };
        let mut weights = vec![0.0; members.len()];
        weights[0] = 1.0;
        return Ok(SuperLearnerFit {
            model: FittedModel::constant(p, dim),
            weights,
            cv_risk: vec![0.0; members.len()],
        });
    }

    let fold = fold_assignment(n, folds, seed);
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let mut cv = Array2::<f64>::zeros((n, members.len()));
    for k in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold[i] != k).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold[i] == k).collect();
        let x_train = features.select(Axis(0), &train);
        let y_train: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let x_test = features.select(Axis(0), &test);
        for (m, spec) in members.iter().enumerate() {
            let model = fit(spec, x_train.view(), &y_train, time_columns, seed.wrapping_add(k as u64 + 1))?;
            let pred = model.predict(x_test.view())?;
            for (&i, p) in test.iter().zip(pred) {
                cv[[i, m]] = p;
            }
        }
    }
    let cv_risk: Vec<f64> = (0..members.len())
        .map(|m| cv.column(m).iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64)
        .collect();
    let y = ndarray::Array1::from(y);
    let mut weights = nnls(cv.view(), y.view());
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        let best = (0..members.len())
            .min_by(|&a, &b| cv_risk[a].total_cmp(&cv_risk[b]))
            .expect("members nonempty");
        weights = vec![0.0; members.len()];
        weights[best] = 1.0;
    }

    let mut kept_weights = Vec::new();
    let mut fitted = Vec::new();
    for (spec, &w) in members.iter().zip(&weights) {
        if w > 0.0 {
            kept_weights.push(w);
            fitted.push(fit(spec, features, labels, time_columns, seed)?);
        }
    }
    Ok(SuperLearnerFit {
        model: FittedModel {
            feature_dimension: dim,
            state: ModelState::Ensemble {
                weights: kept_weights,
                members: fitted,
            },
        },
        weights,
        cv_risk,
    })
}
