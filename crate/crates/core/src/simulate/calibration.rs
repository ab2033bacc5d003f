//! Calibration of the censoring intercept `β0C` to a target censoring rate
//! among retained observations, by bisection over a fixed Monte Carlo pool
//! (common random numbers, so the rate is monotone in `β0C`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};

use super::constants::BETA0C;
use super::{draw_candidate, observe, Candidate, Sampler, Skew, TruthOracle};
use crate::error::{Error, Result};
use crate::rng::stream_id;

pub const CALIBRATION_N: usize = 200_000;
pub const CALIBRATION_SEED: u64 = 20_231_107;
const DEFAULT_TARGET: f64 = 0.25;

fn pool(scenario: u8, skew: Skew, n_mc: usize, seed: u64) -> Vec<Candidate> {
    let truth = TruthOracle { scenario, skew };
    let mut s = Sampler::new(seed, stream_id(&[0xCA11, u64::from(scenario), skew as u64]));
    (0..n_mc).map(|_| draw_candidate(&mut s, &truth, true)).collect()
}

fn censoring_rate(pool: &[Candidate], scenario: u8, m: Option<usize>, beta0c: f64) -> f64 {
    let (mut kept, mut censored) = (0usize, 0usize);
    for c in pool {
        let o = observe(c, scenario, beta0c, m);
        if o.kept {
            kept += 1;
            censored += usize::from(!o.event);
        }
    }
    censored as f64 / kept.max(1) as f64
}

/// Bisection for `β0C` such that the censoring rate among retained draws
/// equals `target`.
pub fn calibrate_beta0c(
    scenario: u8,
    skew: Skew,
    discrete_intervals: Option<usize>,
    target: f64,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument("censoring target must lie in (0, 1)".into()));
    }
    if scenario == 3 || !(1..=5).contains(&scenario) {
        return Err(Error::InvalidArgument(format!("scenario {scenario} has no censoring to calibrate")));
    }
    let draws = pool(scenario, skew, n_mc, seed);
    let rate = |b: f64| censoring_rate(&draws, scenario, discrete_intervals, b);
    let mut bracket = None;
    for (lo, hi) in [(-5.0, 10.0), (-20.0, 25.0)] {
        if rate(lo) > target && rate(hi) < target {
            bracket = Some((lo, hi));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::Simulation(format!("censoring rate {target} is not attainable in scenario {scenario}"))
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `β0C` for the default settings, from the generated table when available,
/// otherwise calibrated once per process and memoized.
pub fn calibrated_beta0c(scenario: u8, skew: Skew, discrete_intervals: Option<usize>, target: f64) -> Result<f64> {
    // rounding happens after selection, so scenario 5 retains and censors
    // exactly like scenario 2
    let (scenario, discrete_intervals) = if scenario == 5 { (2, None) } else { (scenario, discrete_intervals) };
    let m = discrete_intervals.unwrap_or(0);
    if target == DEFAULT_TARGET {
        if let Some(&(_, _, _, b)) = BETA0C
            .iter()
            .find(|&&(s, k, mm, _)| s == scenario && k == skew && mm == m)
        {
            return Ok(b);
        }
    }
    type Key = (u8, Skew, usize, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (scenario, skew, m, target.to_bits());
    if let Some(&b) = cache.lock().expect("cache lock").get(&key) {
        return Ok(b);
    }
    let b = calibrate_beta0c(scenario, skew, discrete_intervals, target, CALIBRATION_N, CALIBRATION_SEED)?;
    cache.lock().expect("cache lock").insert(key, b);
    Ok(b)
}

/// Settings covered by the generated table.
pub(super) fn table_settings() -> Vec<(u8, Skew, usize)> {
    let mut out = Vec::new();
    for skew in [Skew::Left, Skew::Right] {
        for s in [1u8, 2, 4] {
            out.push((s, skew, 0));
        }
    }
    out
}

/// Source text of `constants.rs`.
pub fn calibration_table_source() -> Result<String> {
    let mut src = String::new();
    src.push_str("// Generated by `calibration_table_source()`; do not edit by hand.\n");
    let _ = writeln!(
        src,
        "// Censoring target {DEFAULT_TARGET}, Monte Carlo pool {CALIBRATION_N}, seed {CALIBRATION_SEED}."
    );
    src.push_str("// Columns: scenario, skew, intervals (0 = continuous), beta0c.\n\n");
    src.push_str("use super::Skew;\n\n");
    src.push_str("pub(super) const BETA0C: &[(u8, Skew, usize, f64)] = &[\n");
    for (s, skew, m) in table_settings() {
        let b = calibrate_beta0c(s, skew, (m > 0).then_some(m), DEFAULT_TARGET, CALIBRATION_N, CALIBRATION_SEED)?;
        let k = match skew {
            Skew::Left => "Skew::Left",
            Skew::Right => "Skew::Right",
        };
        let _ = writeln!(src, "    ({s}, {k}, {m}, {b:?}),");
    }
    src.push_str("];\n");
    Ok(src)
}
