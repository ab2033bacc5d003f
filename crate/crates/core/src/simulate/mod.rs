//! Synthetic scenarios with known conditional survival functions.
//!
//! | scenario | event law              | sampling                         |
//! |----------|------------------------|----------------------------------|
//! | 1        | 100·Beta, a(x)          | censored, untruncated            |
//! | 2        | 100·Beta, a(x)          | censored, keep Y ≥ W             |
//! | 3        | 100·Beta, a(x)          | uncensored, keep Y ≤ W           |
//! | 4        | S0(t)^c(x), S0 Beta     | censored, keep Y ≥ W             |
//! | 5        | as 2, on m intervals    | censored, keep Y ≥ W, then round |

mod benchmark;
mod calibration;
mod constants;
mod sampling;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg};

use crate::data::{SurvivalDataset, TruncationMode};
use crate::error::{Error, Result};
use crate::rng::stream_id;

pub use benchmark::{run_benchmark, write_benchmark_csv, BenchMethod, BenchRow, BenchSetting, BenchmarkConfig, BenchmarkResult};
pub use calibration::{calibrate_beta0c, calibrated_beta0c, calibration_table_source, CALIBRATION_N, CALIBRATION_SEED};
pub use sampling::Sampler;

pub const N_COVARIATES: usize = 10;
const WEIBULL_SHAPE: f64 = 1.5;
const MAX_ATTEMPTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skew {
    Left,
    Right,
}

impl FromStr for Skew {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Skew::Left),
            "right" => Ok(Skew::Right),
            other => Err(Error::InvalidArgument(format!("unknown skew `{other}` (use left or right)"))),
        }
    }
}

impl fmt::Display for Skew {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Skew::Left => "left",
            Skew::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: u8,
    pub skew: Skew,
    pub n: usize,
    pub seed: u64,
    /// Number of intervals on [0, 100] (scenario 5 only).
    pub discrete_intervals: Option<usize>,
    pub censoring_target: f64,
}

impl ScenarioSpec {
    /// Defaults: 25% censoring, 20 intervals for scenario 5.
    pub fn new(scenario: u8, skew: Skew, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            skew,
            n,
            seed,
            discrete_intervals: (scenario == 5).then_some(20),
            censoring_target: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.scenario) {
            return Err(Error::InvalidArgument(format!("scenario {} is not in 1..=5", self.scenario)));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        match (self.scenario, self.discrete_intervals) {
            (5, None) | (5, Some(0)) => {
                return Err(Error::InvalidArgument("scenario 5 needs a positive interval count".into()))
            }
            (5, _) | (_, None) => {}
            (_, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "discrete intervals only apply to scenario 5".into(),
                ))
            }
        }
        if self.scenario != 3 && !(self.censoring_target > 0.0 && self.censoring_target < 1.0) {
            return Err(Error::InvalidArgument("censoring target must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn truncation(&self) -> TruncationMode {
        match self.scenario {
            1 => TruncationMode::None,
            3 => TruncationMode::Right,
            _ => TruncationMode::Left,
        }
    }

    pub fn censored(&self) -> bool {
        self.scenario != 3
    }
}

/// `log a(x) = x1 + x2 + x3 + x4 + x5 + x1x2 + x3x4 + x1x5`.
pub fn log_a(x: &[f64]) -> f64 {
    x[0] + x[1] + x[2] + x[3] + x[4] + x[0] * x[1] + x[2] * x[3] + x[0] * x[4]
}

/// Hazard ratio of the proportional-hazards scenario, `exp{(x1 + … + x5) / 2}`.
pub fn hazard_ratio(x: &[f64]) -> f64 {
    (0.5 * x[..5].iter().sum::<f64>()).exp()
}

fn censoring_linear(x: &[f64]) -> f64 {
    0.5 * (x[0] + x[1]) + 0.2 * (x[2] + x[3] + x[4])
}

/// True conditional survival function of the event time.
///
/// Scenarios 1, 2, 3, 5: `T = 100 Z` with `Z ~ Beta(a(x) + 2, 2)` (left skew)
/// or `Beta(2, a(x) + 2)` (right skew). Scenario 4: proportional hazards
/// with hazard ratio `c(x)` on the baseline `S0(t) = P(100 Z > t)`,
/// `Z ~ Beta(3, 2)` (left) or `Beta(2, 3)` (right), so `S(t|x) = S0(t)^c(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthOracle {
    pub scenario: u8,
    pub skew: Skew,
}

impl TruthOracle {
    /// Beta parameters of the (baseline) law of `T / 100`, and the exponent
    /// applied to the baseline survival.
    pub fn law(&self, x: &[f64]) -> (f64, f64, f64) {
        if self.scenario == 4 {
            let c = hazard_ratio(x);
            match self.skew {
                Skew::Left => (3.0, 2.0, c),
                Skew::Right => (2.0, 3.0, c),
            }
        } else {
            let a = log_a(x).exp();
            match self.skew {
                Skew::Left => (a + 2.0, 2.0, 1.0),
                Skew::Right => (2.0, a + 2.0, 1.0),
            }
        }
    }

    pub fn survival(&self, x: &[f64], t: f64) -> f64 {
        let (a, b, power) = self.law(x);
        let u = t / 100.0;
        if u <= 0.0 {
            1.0
        } else if u >= 1.0 {
            0.0
        } else {
            let base = (1.0 - beta_reg(a, b, u)).clamp(0.0, 1.0);
            if power == 1.0 {
                base
            } else {
                base.powf(power)
            }
        }
    }

    pub fn survival_row(&self, x: ArrayView1<'_, f64>, t: f64) -> f64 {
        match x.as_slice() {
            Some(s) => self.survival(s, t),
            None => self.survival(&x.to_vec(), t),
        }
    }

    pub fn sample(&self, s: &mut Sampler, x: &[f64]) -> f64 {
        let (a, b, power) = self.law(x);
        if power == 1.0 && self.scenario != 4 {
            return 100.0 * s.beta(a, b);
        }
        // inverse transform: S0(T / 100) = U^{1 / c}
        let p = -(s.uniform().ln() / power).exp_m1();
        100.0 * inv_beta_reg(a, b, p.clamp(0.0, 1.0))
    }
}

fn draw_covariates(s: &mut Sampler, out: &mut [f64]) {
    out[0] = 2.0 * s.uniform() - 1.0;
    out[1] = 2.0 * s.uniform() - 1.0;
    out[2] = if s.uniform() < 0.5 { -1.0 } else { 1.0 };
    out[3] = if s.uniform() < 0.5 { -1.0 } else { 1.0 };
    for v in &mut out[4..N_COVARIATES] {
        *v = s.normal();
    }
}

/// `n × 10` covariates: X1, X2 ~ U(−1, 1), X3, X4 ~ U{−1, 1}, X5..X10 ~ N(0, 1).
pub fn gen_covariates(n: usize, seed: u64) -> Array2<f64> {
    let mut s = Sampler::new(seed, stream_id(&[0xC0FA, n as u64]));
    let mut x = Array2::zeros((n, N_COVARIATES));
    let mut row = [0.0; N_COVARIATES];
    for i in 0..n {
        draw_covariates(&mut s, &mut row);
        x.row_mut(i).iter_mut().zip(row).for_each(|(a, b)| *a = b);
    }
    x
}

/// Entry time `100 · Beta(1 + ½·1(x1 > 0), 1 + ½·1(x1 < 0))`.
pub fn gen_entry(s: &mut Sampler, x: &[f64]) -> f64 {
    let a = 1.0 + if x[0] > 0.0 { 0.5 } else { 0.0 };
    let b = 1.0 + if x[0] < 0.0 { 0.5 } else { 0.0 };
    100.0 * s.beta(a, b)
}

/// Weibull censoring time, shape 1.5, scale `exp{β0C + ½(x1 + x2) + ⅕(x3 + x4 + x5)}`.
pub fn gen_censoring(s: &mut Sampler, x: &[f64], beta0c: f64) -> f64 {
    s.weibull(WEIBULL_SHAPE, (beta0c + censoring_linear(x)).exp())
}

/// Right endpoint of the interval of width `100 / m` containing `y`.
pub fn round_up(y: f64, m: usize) -> f64 {
    let h = 100.0 / m as f64;
    let mut j = (y / h).ceil();
    if j * h < y {
        j += 1.0;
    }
    j * h
}

/// Left endpoint of the interval of width `100 / m` containing `w`.
pub fn round_down(w: f64, m: usize) -> f64 {
    let h = 100.0 / m as f64;
    let mut j = (w / h).floor();
    if j * h > w {
        j -= 1.0;
    }
    j * h
}

/// Candidate draw before selection. The censoring time is kept as the unit
/// exponential `e` so calibration can rescale it without redrawing.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub x: [f64; N_COVARIATES],
    pub t: f64,
    pub e: f64,
    pub w: f64,
}

pub(crate) struct Observed {
    pub y: f64,
    pub w: f64,
    pub event: bool,
    pub kept: bool,
}

pub(crate) fn draw_candidate(s: &mut Sampler, truth: &TruthOracle, censored: bool) -> Candidate {
    let mut x = [0.0; N_COVARIATES];
    draw_covariates(s, &mut x);
    let t = truth.sample(s, &x);
    let e = if censored { -s.uniform().ln() } else { f64::INFINITY };
    let w = gen_entry(s, &x);
    Candidate { x, t, e, w }
}

pub(crate) fn observe(c: &Candidate, scenario: u8, beta0c: f64, m: Option<usize>) -> Observed {
    let cens = (beta0c + censoring_linear(&c.x)).exp() * c.e.powf(1.0 / WEIBULL_SHAPE);
    let (mut y, event) = if c.t <= cens { (c.t, true) } else { (cens, false) };
    let mut w = c.w;
    let kept = y > 0.0
        && match scenario {
            1 => true,
            3 => y <= w,
            _ => y >= w,
        };
    // selection acts on the continuous times; only the recorded values are rounded
    if let Some(m) = m {
        y = round_up(y, m);
        w = round_down(w, m);
    }
    Observed { y, w, event, kept }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub data: SurvivalDataset,
    pub truth: TruthOracle,
    /// Fraction of candidate draws rejected by the truncation criterion.
    pub truncation_rate: f64,
    pub censoring_rate: f64,
    pub beta0c: Option<f64>,
}

/// Draws candidates until `n` satisfy the scenario's selection criterion.
pub fn gen_scenario(spec: &ScenarioSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let truth = TruthOracle {
        scenario: spec.scenario,
        skew: spec.skew,
    };
    let beta0c = if spec.censored() {
        Some(calibrated_beta0c(spec.scenario, spec.skew, spec.discrete_intervals, spec.censoring_target)?)
    } else {
        None
    };
    let mut s = Sampler::new(
        spec.seed,
        stream_id(&[
            0xDA7A,
            u64::from(spec.scenario),
            spec.skew as u64,
            spec.n as u64,
            spec.discrete_intervals.unwrap_or(0) as u64,
        ]),
    );
    let n = spec.n;
    let mut x = Array2::zeros((n, N_COVARIATES));
    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while y.len() < n {
        if attempts >= MAX_ATTEMPTS {
            return Err(Error::Simulation(format!(
                "only {} of {n} observations accepted after {MAX_ATTEMPTS} draws",
                y.len()
            )));
        }
        attempts += 1;
        let c = draw_candidate(&mut s, &truth, spec.censored());
        let o = observe(&c, spec.scenario, beta0c.unwrap_or(0.0), spec.discrete_intervals);
        if !o.kept {
            continue;
        }
        let i = y.len();
        x.row_mut(i).iter_mut().zip(c.x).for_each(|(a, b)| *a = b);
        y.push(o.y);
        event.push(o.event);
        w.push(o.w);
    }
    let mode = spec.truncation();
    if mode == TruncationMode::None {
        w.iter_mut().for_each(|v| *v = 0.0);
    }
    let censoring_rate = event.iter().filter(|&&e| !e).count() as f64 / n as f64;
    let names = (1..=N_COVARIATES).map(|j| format!("x{j}")).collect();
    let data = SurvivalDataset::with_names(x, names, y, event, w, mode)?;
    Ok(SimulatedData {
        data,
        truth,
        truncation_rate: 1.0 - n as f64 / attempts as f64,
        censoring_rate,
        beta0c,
    })
}
