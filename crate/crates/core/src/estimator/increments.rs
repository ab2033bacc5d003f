//! Hazard increments on the approximation grid and the two maps from
//! increments to survival probabilities.

use serde::{Deserialize, Serialize};

/// Counters for numerical safeguards applied while predicting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Denominators raised to the floor.
    pub floored_denominators: usize,
    /// Negative increments clipped to zero.
    pub negative_increments: usize,
    /// Survival values outside `[0, 1]` before clipping (product map only).
    pub out_of_range: usize,
    /// Survival values produced.
    pub evaluated: usize,
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.floored_denominators += other.floored_denominators;
        self.negative_increments += other.negative_increments;
        self.out_of_range += other.out_of_range;
        self.evaluated += other.evaluated;
    }

    /// Fraction of produced survival values that fell outside `[0, 1]`.
    pub fn out_of_range_rate(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.out_of_range as f64 / self.evaluated as f64
        }
    }
}

/// Constituent predictions for one subject on the approximation grid.
/// Index 0 of every vector is the grid anchor `t_0`.
#[derive(Debug, Clone)]
pub struct Components<'a> {
    pub pi: f64,
    pub f1: &'a [f64],
    /// Absent when there are no censored subjects; its denominator term is
    /// then dropped.
    pub f0: Option<&'a [f64]>,
    /// Absent without truncation (`G ≡ 1`).
    pub g1: Option<&'a [f64]>,
    pub g0: Option<&'a [f64]>,
}

/// Which distribution the numerator targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Event,
    Censoring,
}

/// Increments `M(t_i)` at grid times `t_1..t_k`, with `M(t_0) = 0` implied.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardIncrements {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Computes
///
/// ```text
///            π {F1(t_i) − F1(t_{i−1})}
/// M(t_i) = ─────────────────────────────────────────────────────────────
///          G1(t_i) π {1 − F1(t_{i−1})} + G0(t_i) (1 − π) {1 − F0(t_{i−1})}
/// ```
///
/// or, for the censoring target, the same with numerator
/// `(1 − π) {F0(t_i) − F0(t_{i−1})}`. Denominators are floored at
/// `denom_floor` and negative increments are clipped to zero.
pub fn increments(
    c: &Components<'_>,
    times: &[f64],
    target: Target,
    denom_floor: f64,
    diag: &mut Diagnostics,
) -> HazardIncrements {
    let k = times.len();
    debug_assert_eq!(c.f1.len(), k + 1);
    let mut values = Vec::with_capacity(k);
    for i in 1..=k {
        let g1 = c.g1.map_or(1.0, |g| g[i]);
        let mut den = g1 * c.pi * (1.0 - c.f1[i - 1]);
        if let Some(f0) = c.f0 {
            let g0 = c.g0.map_or(1.0, |g| g[i]);
            den += g0 * (1.0 - c.pi) * (1.0 - f0[i - 1]);
        }
        let num = match target {
            Target::Event => c.pi * (c.f1[i] - c.f1[i - 1]),
            Target::Censoring => match c.f0 {
                Some(f0) => (1.0 - c.pi) * (f0[i] - f0[i - 1]),
                None => 0.0,
            },
        };
        if !(den >= denom_floor) {
            den = denom_floor;
            diag.floored_denominators += 1;
        }
        let mut m = num / den;
        if m < 0.0 {
            m = 0.0;
            diag.negative_increments += 1;
        }
        values.push(m);
    }
    HazardIncrements {
        times: times.to_vec(),
        values,
    }
}

/// `∏_{t_i ≤ t} {1 − M(t_i)}`.
pub fn survival_product(incs: &HazardIncrements, t: f64) -> f64 {
    let k = incs.times.partition_point(|&s| s <= t);
    incs.values[..k].iter().map(|m| 1.0 - m).product()
}

/// `exp{−Σ_{t_i ≤ t} M(t_i)}`.
pub fn survival_exponential(incs: &HazardIncrements, t: f64) -> f64 {
    let k = incs.times.partition_point(|&s| s <= t);
    (-incs.values[..k].iter().sum::<f64>()).exp()
}

/// Running survival at every grid time (product or exponential map).
pub fn survival_path(incs: &HazardIncrements, product: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(incs.values.len());
    if product {
        let mut s = 1.0;
        for m in &incs.values {
            s *= 1.0 - m;
            out.push(s);
        }
    } else {
        let mut total = 0.0;
        for m in &incs.values {
            total += m;
            out.push((-total).exp());
        }
    }
    out
}
