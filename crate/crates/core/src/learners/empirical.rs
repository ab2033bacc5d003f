use serde::{Deserialize, Serialize};

/// Covariate-blind frequency table keyed by the time-basis columns.
///
/// Each distinct time key maps to the empirical mean of the labels sharing
/// it; with no time columns this is the overall mean. A single (continuous)
/// time column is looked up as a right-continuous step function, flat
/// outside the observed keys. Used to reproduce product-limit estimators
/// exactly through the stacking pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalModel {
    time_columns: usize,
    keys: Vec<Vec<f64>>,
    values: Vec<f64>,
    overall: f64,
}

fn cmp_keys(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

impl EmpiricalModel {
    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, y: &[bool], time_columns: usize) -> Self {
        let mut keyed: Vec<(Vec<f64>, bool)> = rows
            .zip(y)
            .map(|(r, &l)| (r[r.len() - time_columns..].to_vec(), l))
            .collect();
        keyed.sort_by(|a, b| cmp_keys(&a.0, &b.0));
        let mut keys: Vec<Vec<f64>> = Vec::new();
        let mut values = Vec::new();
        let mut i = 0;
        while i < keyed.len() {
            let mut j = i;
            let mut hits = 0usize;
            while j < keyed.len() && cmp_keys(&keyed[j].0, &keyed[i].0).is_eq() {
                hits += usize::from(keyed[j].1);
                j += 1;
            }
            keys.push(keyed[i].0.clone());
            values.push(hits as f64 / (j - i) as f64);
            i = j;
        }
        let overall = y.iter().filter(|&&l| l).count() as f64 / y.len().max(1) as f64;
        Self {
            time_columns,
            keys,
            values,
            overall,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        if self.keys.is_empty() {
            return self.overall;
        }
        let key = &row[row.len() - self.time_columns..];
        match self.keys.binary_search_by(|k| cmp_keys(k, key)) {
            Ok(pos) => self.values[pos],
            Err(pos) if self.time_columns == 1 => self.values[pos.saturating_sub(1)],
            Err(_) => self.overall,
        }
    }
}
