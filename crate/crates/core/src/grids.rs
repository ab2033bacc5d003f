//! Time grids: the approximation grid for the hazard sum/product and the
//! regression grids the pooled binary regressions are stacked on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An anchor time followed by strictly increasing cut points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    anchor: f64,
    cuts: Vec<f64>,
}

impl TimeGrid {
    pub fn new(anchor: f64, cuts: Vec<f64>) -> Result<Self> {
        if !anchor.is_finite() || anchor < 0.0 {
            return Err(Error::InvalidGrid(format!("anchor {anchor} must be finite and nonnegative")));
        }
        let Some(&first) = cuts.first() else {
            return Err(Error::InvalidGrid("grid has no cut points".into()));
        };
        if cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGrid("cut points must be finite".into()));
        }
        if first <= anchor {
            return Err(Error::InvalidGrid(format!(
                "first cut {first} must exceed the anchor {anchor}"
            )));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("cut points must be strictly increasing".into()));
        }
        Ok(Self { anchor, cuts })
    }

    /// Grid anchored at zero.
    pub fn from_cuts(cuts: Vec<f64>) -> Result<Self> {
        Self::new(0.0, cuts)
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.cuts.last().expect("grid is nonempty")
    }

    /// Number of cuts `<= t`.
    pub fn count_at_or_below(&self, t: f64) -> usize {
        self.cuts.partition_point(|&c| c <= t)
    }
}

/// Distinct sorted values `<= t_max`, anchored at zero.
pub fn grid_all_times(values: &[f64], t_max: f64) -> Result<TimeGrid> {
    if values.is_empty() {
        return Err(Error::InvalidGrid("no values to build a grid from".into()));
    }
    let mut cuts: Vec<f64> = values.iter().copied().filter(|&v| v <= t_max).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() {
        return Err(Error::InvalidGrid(format!("no values at or below t_max = {t_max}")));
    }
    TimeGrid::from_cuts(cuts)
}

/// Nearest-rank quantile of an ascending sample at probability `num / den`:
/// the order statistic of rank `ceil(n * num / den)`, computed in integers.
pub fn nearest_rank(sorted: &[f64], num: usize, den: usize) -> f64 {
    let n = sorted.len();
    let rank = (n * num).div_ceil(den).clamp(1, n);
    sorted[rank - 1]
}

/// Nearest-rank quantiles at `j / k` for `j = 1..=k`, clipped to `t_max` and
/// deduplicated.
pub fn grid_quantile(values: &[f64], k: usize, t_max: f64) -> Result<TimeGrid> {
    if values.is_empty() {
        return Err(Error::InvalidGrid("no values to build a grid from".into()));
    }
    if k == 0 {
        return Err(Error::InvalidGrid("quantile grid needs at least one cut".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = (1..=k).map(|j| nearest_rank(&sorted, j, k).min(t_max)).collect();
    cuts.dedup();
    TimeGrid::from_cuts(cuts)
}

/// How a grid is derived from a sample of times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridPolicy {
    /// Every distinct observed time.
    All,
    /// `k` cut points evenly spaced on the quantile scale.
    Quantile(usize),
}

impl GridPolicy {
    pub fn build(self, values: &[f64], t_max: f64) -> Result<TimeGrid> {
        match self {
            GridPolicy::All => grid_all_times(values, t_max),
            GridPolicy::Quantile(k) => grid_quantile(values, k, t_max),
        }
    }
}

impl FromStr for GridPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(GridPolicy::All);
        }
        s.strip_prefix('k')
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k > 0)
            .map(GridPolicy::Quantile)
            .ok_or_else(|| Error::InvalidGrid(format!("grid policy `{s}` is neither `all` nor `kN`")))
    }
}

impl fmt::Display for GridPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridPolicy::All => f.write_str("all"),
            GridPolicy::Quantile(k) => write!(f, "k{k}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_times_dedupes_and_filters() {
        assert_eq!(grid_all_times(&[2.0, 1.0, 2.0, 3.0], 3.0).unwrap().cuts(), &[1.0, 2.0, 3.0]);
        assert_eq!(grid_all_times(&[1.0, 2.0, 3.0], 2.5).unwrap().cuts(), &[1.0, 2.0]);
        assert!(grid_all_times(&[5.0], 3.0).is_err());
        assert!(grid_all_times(&[], 3.0).is_err());
    }

    #[test]
    fn quantile_grids() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(grid_quantile(&v, 2, 4.0).unwrap().cuts(), &[2.0, 4.0]);
        assert_eq!(grid_quantile(&v, 4, 4.0).unwrap().cuts(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(grid_quantile(&[7.0, 7.0, 7.0], 3, 7.0).unwrap().cuts(), &[7.0]);
        assert!(grid_quantile(&[], 3, 1.0).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("all".parse::<GridPolicy>().unwrap(), GridPolicy::All);
        assert_eq!("k40".parse::<GridPolicy>().unwrap(), GridPolicy::Quantile(40));
        assert!("k0".parse::<GridPolicy>().is_err());
        assert!("40".parse::<GridPolicy>().is_err());
        assert_eq!(GridPolicy::Quantile(10).to_string(), "k10");
    }

    #[test]
    fn grid_rejects_bad_cuts() {
        assert!(TimeGrid::from_cuts(vec![]).is_err());
        assert!(TimeGrid::from_cuts(vec![0.0, 1.0]).is_err());
        assert!(TimeGrid::from_cuts(vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::new(2.0, vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn quantile_grid_is_valid_subset(
            raw in prop::collection::vec(1u32..60, 1..40),
            k in 1usize..50,
        ) {
            let values: Vec<f64> = raw.iter().map(|&v| f64::from(v) / 4.0).collect();
            let t_max = values.iter().copied().fold(0.0, f64::max);
            let all = grid_all_times(&values, t_max).unwrap();
            let q = grid_quantile(&values, k, t_max).unwrap();
            prop_assert!(q.cuts().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(q.cuts().iter().all(|c| all.cuts().contains(c)));
            prop_assert!(q.len() <= k.min(all.len()));
            let full = grid_quantile(&values, values.len(), t_max).unwrap();
            prop_assert_eq!(full.cuts(), all.cuts());
        }
    }
}
