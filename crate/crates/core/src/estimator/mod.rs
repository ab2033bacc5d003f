//! Global survival stacking: five pooled binary regressions composed into
//! hazard increments and survival curves. Also the censoring-curve swap, the
//! reverse-time wrapper for right-truncated data, and the discrete-hazard
//! comparator.

mod increments;
mod isotonic;
mod local;
mod persist;
mod retrospective;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SurvivalDataset, TruncationMode};
use crate::error::{Error, Result};
use crate::grids::{GridPolicy, TimeGrid};
use crate::learners::{self, FittedModel, LearnerSpec, PROB_CLIP};
use crate::rng::stream_id;
use crate::stacking::{stack_f, stack_g, StackedDataset, TimeBasis, TimeEncoder};

pub use increments::{
    increments, survival_exponential, survival_path, survival_product, Components, Diagnostics, HazardIncrements,
    Target,
};
pub use isotonic::{isotonize, pava};
pub use local::{fit_local, LocalStackFit};
pub use persist::{load_model, save_model, ModelDocument, MODEL_VERSION};
pub use retrospective::{fit_retrospective, RetrospectiveFit};

/// Map from hazard increments to survival probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    Product,
    #[default]
    Exponential,
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prod" | "product" => Ok(Mapping::Product),
            "exp" | "exponential" => Ok(Mapping::Exponential),
            other => Err(Error::InvalidArgument(format!("unknown mapping `{other}` (use exp or prod)"))),
        }
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mapping::Product => "prod",
            Mapping::Exponential => "exp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub mapping: Mapping,
    /// Isotonize F predictions across grid times before forming increments.
    pub isotonize: bool,
    /// Same for the G predictions.
    pub isotonize_g: bool,
    pub denom_floor: f64,
    pub basis: TimeBasis,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            mapping: Mapping::Exponential,
            isotonize: true,
            isotonize_g: false,
            denom_floor: 1e-12,
            basis: TimeBasis::Continuous,
            seed: 0,
        }
    }
}

/// Either a rule for building a grid from the training data or a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub enum GridChoice {
    Policy(GridPolicy),
    Fixed(TimeGrid),
}

impl GridChoice {
    fn resolve(&self, values: &[f64], t_max: f64) -> Result<TimeGrid> {
        match self {
            GridChoice::Policy(p) => p.build(values, t_max),
            GridChoice::Fixed(g) => Ok(g.clone()),
        }
    }
}

/// Grid choices for the approximation grid (built from all follow-up times)
/// and the regression grids (event and censoring times respectively).
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub approx: GridChoice,
    pub event: GridChoice,
    pub censor: GridChoice,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            approx: GridChoice::Policy(GridPolicy::All),
            event: GridChoice::Policy(GridPolicy::Quantile(40)),
            censor: GridChoice::Policy(GridPolicy::Quantile(40)),
        }
    }
}

impl GridConfig {
    /// Every grid set to the given policy.
    pub fn uniform(policy: GridPolicy) -> Self {
        Self {
            approx: GridChoice::Policy(GridPolicy::All),
            event: GridChoice::Policy(policy),
            censor: GridChoice::Policy(policy),
        }
    }

    /// All three grids fixed to the distinct follow-up times of `d`.
    pub fn all_follow_up(d: &SurvivalDataset) -> Result<Self> {
        let g = crate::grids::grid_all_times(d.follow_up(), d.max_follow_up())?;
        Ok(Self {
            approx: GridChoice::Fixed(g.clone()),
            event: GridChoice::Fixed(g.clone()),
            censor: GridChoice::Fixed(g),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitGrids {
    pub approx: TimeGrid,
    pub event: TimeGrid,
    pub censor: Option<TimeGrid>,
}

/// Model for `π(x) = P(Δ = 1 | X = x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiModel {
    Fitted(FittedModel),
    Fixed(f64),
}

impl PiModel {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            PiModel::Fitted(m) => m.predict_row(x),
            PiModel::Fixed(p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstituentModels {
    pub pi: PiModel,
    pub f1: FittedModel,
    pub f0: Option<FittedModel>,
    pub g1: Option<FittedModel>,
    pub g0: Option<FittedModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoders {
    pub event: TimeEncoder,
    pub censor: Option<TimeEncoder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStackFit {
    pub covariates: Vec<String>,
    pub time_scale: f64,
    pub grids: FitGrids,
    pub encoders: Encoders,
    pub options: FitOptions,
    pub learner: LearnerSpec,
    pub learners: ConstituentModels,
}

/// Predicted curves, one row per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurveMatrix {
    pub times: Vec<f64>,
    pub values: Array2<f64>,
    pub diagnostics: Diagnostics,
}

impl SurvivalCurveMatrix {
    pub fn n_subjects(&self) -> usize {
        self.values.nrows()
    }
}

/// Fits π, F1, F0 and (under left truncation) G1, G0.
pub fn fit_global(
    d: &SurvivalDataset,
    spec: &LearnerSpec,
    grids: &GridConfig,
    options: &FitOptions,
) -> Result<GlobalStackFit> {
    if d.truncation() == TruncationMode::Right {
        return Err(Error::InvalidArgument(
            "right-truncated data must be fitted in reverse time (fit_retrospective)".into(),
        ));
    }
    fit_with_pi(d, spec, grids, options, None)
}

pub(crate) fn fit_with_pi(
    d: &SurvivalDataset,
    spec: &LearnerSpec,
    grids: &GridConfig,
    options: &FitOptions,
    fixed_pi: Option<f64>,
) -> Result<GlobalStackFit> {
    spec.validate()?;
    if !(options.denom_floor > 0.0) {
        return Err(Error::InvalidArgument("denominator floor must be positive".into()));
    }
    if d.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    let t_max = d.max_follow_up();
    let has_censored = d.n_events() < d.len();
    let truncated = d.truncation() == TruncationMode::Left;

    let approx = grids.approx.resolve(d.follow_up(), t_max)?;
    let event_grid = grids.event.resolve(&d.times_with_event(true), t_max)?;
    let censor_grid = if has_censored {
        Some(grids.censor.resolve(&d.times_with_event(false), t_max)?)
    } else {
        None
    };
    let event_enc = TimeEncoder::new(options.basis, t_max, &event_grid);
    let censor_enc = censor_grid
        .as_ref()
        .map(|g| TimeEncoder::new(options.basis, t_max, g));

    let mut stacks: Vec<StackedDataset> = vec![stack_f(d, true, &event_grid, &event_enc)?];
    if let (Some(g), Some(e)) = (&censor_grid, &censor_enc) {
        stacks.push(stack_f(d, false, g, e)?);
    }
    if truncated {
        stacks.push(stack_g(d, true, &event_grid, &event_enc)?);
        if let (Some(g), Some(e)) = (&censor_grid, &censor_enc) {
            stacks.push(stack_g(d, false, g, e)?);
        }
    }

    let pi_job = fixed_pi.is_none() && has_censored;
    let seed = options.seed;
    let fit_pi = || -> Result<Option<FittedModel>> {
        if !pi_job {
            return Ok(None);
        }
        learners::fit(spec, d.covariates().view(), d.event(), 0, stream_id(&[seed, 0])).map(Some)
    };
    let fit_stacks = || -> Result<Vec<FittedModel>> {
        stacks
            .par_iter()
            .enumerate()
            .map(|(k, s)| {
                learners::fit(
                    spec,
                    s.features.view(),
                    &s.labels,
                    s.time_columns(),
                    stream_id(&[seed, k as u64 + 1]),
                )
            })
            .collect()
    };
    let (pi, models) = rayon::join(fit_pi, fit_stacks);
    let pi = match (pi?, fixed_pi) {
        (_, Some(p)) => PiModel::Fixed(p),
        (Some(m), None) => PiModel::Fitted(m),
        (None, None) => PiModel::Fixed(1.0 - PROB_CLIP),
    };
    let mut models = models?.into_iter();
    let f1 = models.next().expect("F1 stack always fitted");
    let f0 = if has_censored { models.next() } else { None };
    let (g1, g0) = if truncated {
        (models.next(), if has_censored { models.next() } else { None })
    } else {
        (None, None)
    };

    Ok(GlobalStackFit {
        covariates: d.covariate_names().to_vec(),
        time_scale: t_max,
        grids: FitGrids {
            approx,
            event: event_grid,
            censor: censor_grid,
        },
        encoders: Encoders {
            event: event_enc,
            censor: censor_enc,
        },
        options: *options,
        learner: spec.clone(),
        learners: ConstituentModels { pi, f1, f0, g1, g0 },
    })
}

/// Predictions of `model` at `times` for covariate row `x`.
fn path(model: &FittedModel, enc: &TimeEncoder, x: &[f64], times: &[f64], buf: &mut Vec<f64>) -> Vec<f64> {
    buf.clear();
    buf.extend_from_slice(x);
    let p = x.len();
    buf.resize(p + enc.width(), 0.0);
    times
        .iter()
        .map(|&t| {
            enc.encode_into(t, &mut buf[p..]);
            model.predict_row(buf)
        })
        .collect()
}

impl GlobalStackFit {
    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    /// Largest time a curve can be evaluated at.
    pub fn t_max(&self) -> f64 {
        self.grids.approx.t_max()
    }

    fn check_dim(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_covariates() {
            return Err(Error::DimensionMismatch {
                expected: self.n_covariates(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Increments on the approximation grid for one covariate vector.
    pub fn increments_for(&self, x: &[f64], target: Target, diag: &mut Diagnostics) -> HazardIncrements {
        let anchor = self.grids.approx.anchor();
        let cuts = self.grids.approx.cuts();
        let mut times = Vec::with_capacity(cuts.len() + 1);
        times.push(anchor);
        times.extend_from_slice(cuts);
        let mut buf = Vec::new();
        let m = &self.learners;
        let opts = &self.options;

        let cdf = |model: &FittedModel, enc: &TimeEncoder, buf: &mut Vec<f64>| {
            let mut v = path(model, enc, x, &times, buf);
            if anchor == 0.0 {
                v[0] = 0.0;
            }
            if opts.isotonize {
                v = isotonize(&v);
            }
            v
        };
        let entry = |model: &FittedModel, enc: &TimeEncoder, buf: &mut Vec<f64>| {
            let mut v = path(model, enc, x, &times, buf);
            if opts.isotonize_g {
                v = isotonize(&v);
            }
            v
        };
        let f1 = cdf(&m.f1, &self.encoders.event, &mut buf);
        let censor_enc = self.encoders.censor.as_ref();
        let f0 = m.f0.as_ref().zip(censor_enc).map(|(f, e)| cdf(f, e, &mut buf));
        let g1 = m.g1.as_ref().map(|g| entry(g, &self.encoders.event, &mut buf));
        let g0 = m.g0.as_ref().zip(censor_enc).map(|(g, e)| entry(g, e, &mut buf));
        let c = Components {
            pi: m.pi.predict(x),
            f1: &f1,
            f0: f0.as_deref(),
            g1: g1.as_deref(),
            g0: g0.as_deref(),
        };
        increments(&c, cuts, target, opts.denom_floor, diag)
    }

    /// Curves at `times` (default: the approximation grid cuts). Times beyond
    /// the grid are an error.
    pub fn predict_curve(&self, x: ArrayView2<'_, f64>, times: Option<&[f64]>) -> Result<SurvivalCurveMatrix> {
        self.predict_target(x, times, Target::Event)
    }

    /// Curves of the censoring distribution, from the swapped numerator.
    pub fn predict_censoring_curve(
        &self,
        x: ArrayView2<'_, f64>,
        times: Option<&[f64]>,
    ) -> Result<SurvivalCurveMatrix> {
        self.predict_target(x, times, Target::Censoring)
    }

    fn predict_target(
        &self,
        x: ArrayView2<'_, f64>,
        times: Option<&[f64]>,
        target: Target,
    ) -> Result<SurvivalCurveMatrix> {
        let t_max = self.t_max();
        if let Some(ts) = times {
            if let Some(&bad) = ts.iter().find(|&&t| !(t <= t_max)) {
                return Err(Error::TimeBeyondGrid { time: bad, t_max });
            }
        }
        self.evaluate(x, times, target)
    }

    /// As `predict_curve`, but flat beyond the last grid time.
    pub fn predict_curve_extended(&self, x: ArrayView2<'_, f64>, times: &[f64]) -> Result<SurvivalCurveMatrix> {
        self.evaluate(x, Some(times), Target::Event)
    }

    fn evaluate(&self, x: ArrayView2<'_, f64>, times: Option<&[f64]>, target: Target) -> Result<SurvivalCurveMatrix> {
        self.check_dim(x)?;
        let cuts = self.grids.approx.cuts();
        let times: Vec<f64> = times.map_or_else(|| cuts.to_vec(), <[f64]>::to_vec);
        let positions: Vec<usize> = times.iter().map(|&t| self.grids.approx.count_at_or_below(t)).collect();
        let product = self.options.mapping == Mapping::Product;
        let rows: Vec<(Vec<f64>, Diagnostics)> = (0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i).to_vec();
                let mut diag = Diagnostics::default();
                let incs = self.increments_for(&row, target, &mut diag);
                let path = survival_path(&incs, product);
                let values = positions
                    .iter()
                    .map(|&k| {
                        let s = if k == 0 { 1.0 } else { path[k - 1] };
                        diag.evaluated += 1;
                        if !(0.0..=1.0).contains(&s) {
                            diag.out_of_range += 1;
                        }
                        s.clamp(0.0, 1.0)
                    })
                    .collect();
                (values, diag)
            })
            .collect();
        let mut values = Array2::zeros((rows.len(), times.len()));
        let mut diagnostics = Diagnostics::default();
        for (i, (v, d)) in rows.iter().enumerate() {
            values.row_mut(i).iter_mut().zip(v).for_each(|(a, b)| *a = *b);
            diagnostics.merge(d);
        }
        Ok(SurvivalCurveMatrix {
            times,
            values,
            diagnostics,
        })
    }
}

/// Increments for one covariate vector (convenience wrapper).
pub fn hazard_increments(fit: &GlobalStackFit, x: &[f64]) -> Result<(HazardIncrements, Diagnostics)> {
    if x.len() != fit.n_covariates() {
        return Err(Error::DimensionMismatch {
            expected: fit.n_covariates(),
            got: x.len(),
        });
    }
    let mut diag = Diagnostics::default();
    let incs = fit.increments_for(x, Target::Event, &mut diag);
    Ok((incs, diag))
}
