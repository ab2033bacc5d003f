//! Monte Carlo comparison of estimators against the known truth.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_covariates, gen_scenario, ScenarioSpec, Skew, TruthOracle};
use crate::data::{SurvivalDataset, TruncationMode};
use crate::error::{Error, Result};
use crate::estimator::{
    fit_global, fit_local, fit_retrospective, FitOptions, GridChoice, GridConfig, Mapping,
};
use crate::eval::{kaplan_meier, landmarks, mise_grid, KmTarget, StepCurve};
use crate::grids::GridPolicy;
use crate::learners::LearnerSpec;
use crate::rng::stream_id;
use crate::stacking::TimeBasis;

const LANDMARK_PERCENTS: [usize; 3] = [50, 75, 90];

#[derive(Debug, Clone, PartialEq)]
pub enum BenchMethod {
    Global {
        label: String,
        learner: LearnerSpec,
        approx: GridPolicy,
        regression: GridPolicy,
        mapping: Mapping,
    },
    Local {
        label: String,
        learner: LearnerSpec,
        grid: GridPolicy,
    },
    KaplanMeier,
    Oracle,
}

impl BenchMethod {
    pub fn label(&self) -> &str {
        match self {
            BenchMethod::Global { label, .. } | BenchMethod::Local { label, .. } => label,
            BenchMethod::KaplanMeier => "km",
            BenchMethod::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchSetting {
    pub scenario: u8,
    pub skew: Skew,
    pub discrete_intervals: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub settings: Vec<BenchSetting>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<BenchMethod>,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: u8,
    pub skew: Skew,
    pub n: usize,
    pub replicate: usize,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkResult {
    pub rows: Vec<BenchRow>,
    /// Fit failures, one line each; the matching rows carry metric `error`.
    pub errors: Vec<String>,
}

impl BenchmarkResult {
    /// Values of one metric for one method and sample size, in replicate order.
    pub fn values(&self, method: &str, n: usize, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.n == n && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }
}

struct Job {
    setting: BenchSetting,
    n: usize,
    replicate: usize,
}

/// Product-limit curve of the training data (time-reversed for right truncation).
fn km_predictor(d: &SurvivalDataset) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    if d.truncation() == TruncationMode::Right {
        let tau = d.default_tau();
        let km: StepCurve = kaplan_meier(&d.reverse_time(tau)?, KmTarget::Event)?;
        Ok(Box::new(move |t| if tau - t < 0.0 { 0.0 } else { 1.0 - km.at(tau - t) }))
    } else {
        let km = kaplan_meier(d, KmTarget::Event)?;
        Ok(Box::new(move |t| km.at(t)))
    }
}

fn predict(
    method: &BenchMethod,
    d: &SurvivalDataset,
    x: ArrayView2<'_, f64>,
    times: &[f64],
    truth: &TruthOracle,
    seed: u64,
) -> Result<(Array2<f64>, Option<f64>)> {
    match method {
        BenchMethod::Oracle => Ok((
            Array2::from_shape_fn((x.nrows(), times.len()), |(i, j)| truth.survival_row(x.row(i), times[j])),
            None,
        )),
        BenchMethod::KaplanMeier => {
            let km = km_predictor(d)?;
            let row: Vec<f64> = times.iter().map(|&t| km(t)).collect();
            Ok((Array2::from_shape_fn((x.nrows(), times.len()), |(_, j)| row[j]), None))
        }
        BenchMethod::Global {
            learner,
            approx,
            regression,
            mapping,
            ..
        } => {
            let grids = GridConfig {
                approx: GridChoice::Policy(*approx),
                event: GridChoice::Policy(*regression),
                censor: GridChoice::Policy(*regression),
            };
            let options = FitOptions {
                mapping: *mapping,
                seed,
                ..FitOptions::default()
            };
            let curves = if d.truncation() == TruncationMode::Right {
                fit_retrospective(d, learner, &grids, &options, None)?.predict_curve(x, Some(times))?
            } else {
                fit_global(d, learner, &grids, &options)?.predict_curve_extended(x, times)?
            };
            let rate = curves.diagnostics.out_of_range_rate();
            Ok((curves.values, Some(rate)))
        }
        BenchMethod::Local { learner, grid, .. } => {
            if d.truncation() == TruncationMode::Right {
                let tau = d.default_tau();
                let rev = d.reverse_time(tau)?;
                let g = grid.build(&rev.times_with_event(true), rev.max_follow_up())?;
                let fit = fit_local(&rev, learner, &g, TimeBasis::Continuous, true, seed)?;
                let reflected: Vec<f64> = times.iter().map(|&t| tau - t).collect();
                let c = fit.predict_curve(x, Some(&reflected))?;
                let values = Array2::from_shape_fn(c.values.dim(), |(i, j)| {
                    if reflected[j] < 0.0 {
                        0.0
                    } else {
                        1.0 - c.values[[i, j]]
                    }
                });
                Ok((values, None))
            } else {
                let g = grid.build(&d.times_with_event(true), d.max_follow_up())?;
                let fit = fit_local(d, learner, &g, TimeBasis::Continuous, true, seed)?;
                Ok((fit.predict_curve(x, Some(times))?.values, None))
            }
        }
    }
}

fn run_job(cfg: &BenchmarkConfig, job: &Job) -> (Vec<BenchRow>, Vec<String>) {
    let s = job.setting;
    let seed = stream_id(&[
        cfg.seed,
        u64::from(s.scenario),
        s.skew as u64,
        s.discrete_intervals.unwrap_or(0) as u64,
        job.n as u64,
        job.replicate as u64,
    ]);
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let row = |method: &str, metric: &str, value: f64| BenchRow {
        scenario: s.scenario,
        skew: s.skew,
        n: job.n,
        replicate: job.replicate,
        method: method.to_string(),
        metric: metric.to_string(),
        value,
    };
    let spec = ScenarioSpec {
        scenario: s.scenario,
        skew: s.skew,
        n: job.n,
        seed,
        discrete_intervals: s.discrete_intervals,
        censoring_target: 0.25,
    };
    let sim = match gen_scenario(&spec) {
        Ok(sim) => sim,
        Err(e) => {
            for m in &cfg.methods {
                rows.push(row(m.label(), "error", f64::NAN));
            }
            errors.push(format!("scenario {} {} n={} rep {}: {e}", s.scenario, s.skew, job.n, job.replicate));
            return (rows, errors);
        }
    };
    let test_x = gen_covariates(cfg.n_test, stream_id(&[seed, 0x7E57]));
    let grid = mise_grid();
    let marks = landmarks(&sim.data, &LANDMARK_PERCENTS).unwrap_or_default();
    let mut times = grid.clone();
    times.extend_from_slice(&marks);
    let truth: Vec<Vec<f64>> = (0..cfg.n_test)
        .into_par_iter()
        .map(|i| times.iter().map(|&t| sim.truth.survival_row(test_x.row(i), t)).collect())
        .collect();

    for method in &cfg.methods {
        match predict(method, &sim.data, test_x.view(), &times, &sim.truth, seed) {
            Ok((pred, out_of_range)) => {
                let g = grid.len();
                let mut mise = 0.0;
                for (i, t_row) in truth.iter().enumerate() {
                    for j in 0..g {
                        mise += (pred[[i, j]] - t_row[j]).powi(2);
                    }
                }
                rows.push(row(method.label(), "mise", mise / (cfg.n_test * g) as f64));
                for (k, &p) in LANDMARK_PERCENTS.iter().enumerate().take(marks.len()) {
                    let mse = truth
                        .iter()
                        .enumerate()
                        .map(|(i, t_row)| (pred[[i, g + k]] - t_row[g + k]).powi(2))
                        .sum::<f64>()
                        / cfg.n_test as f64;
                    rows.push(row(method.label(), &format!("mse_q{p}"), mse));
                }
                if let Some(rate) = out_of_range {
                    rows.push(row(method.label(), "out_of_range_rate", rate));
                }
            }
            Err(e) => {
                rows.push(row(method.label(), "error", f64::NAN));
                errors.push(format!(
                    "scenario {} {} n={} rep {} method {}: {e}",
                    s.scenario,
                    s.skew,
                    job.n,
                    job.replicate,
                    method.label()
                ));
            }
        }
    }
    (rows, errors)
}

/// Runs every (setting, size, replicate) job in parallel; rows come back in
/// job order regardless of scheduling.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    if cfg.n_test == 0 || cfg.replicates == 0 {
        return Err(Error::InvalidArgument("benchmark needs test subjects and replicates".into()));
    }
    for s in &cfg.settings {
        ScenarioSpec {
            scenario: s.scenario,
            skew: s.skew,
            n: 1,
            seed: 0,
            discrete_intervals: s.discrete_intervals,
            censoring_target: 0.25,
        }
        .validate()?;
    }
    let mut jobs = Vec::new();
    for &setting in &cfg.settings {
        for &n in &cfg.sizes {
            for replicate in 0..cfg.replicates {
                jobs.push(Job { setting, n, replicate });
            }
        }
    }
    let parts: Vec<(Vec<BenchRow>, Vec<String>)> = jobs.par_iter().map(|j| run_job(cfg, j)).collect();
    let mut out = BenchmarkResult::default();
    for (rows, errors) in parts {
        out.rows.extend(rows);
        out.errors.extend(errors);
    }
    Ok(out)
}

pub fn write_benchmark_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "skew", "n", "replicate", "method", "metric", "value"])?;
    for r in rows {
        w.write_record([
            r.scenario.to_string(),
            r.skew.to_string(),
            r.n.to_string(),
            r.replicate.to_string(),
            r.method.clone(),
            r.metric.clone(),
            r.value.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<benchmark output>".into(),
        source,
    })?;
    Ok(())
}
