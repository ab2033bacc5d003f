//! Nonnegative least squares by the Lawson–Hanson active-set method.

use ndarray::{ArrayView1, ArrayView2};

use super::linalg::lstsq_columns;

/// Minimizes `‖A w − b‖²` subject to `w ≥ 0`.
///
/// # Panics
/// If `b.len() != a.nrows()`.
pub fn nnls(a: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Vec<f64> {
    let (m, n) = a.dim();
    assert_eq!(b.len(), m, "rows of A must match length of b");
    let a: Vec<f64> = a.iter().copied().collect();
    let b: Vec<f64> = b.to_vec();
    if n == 0 {
        return Vec::new();
    }

    let gradient = |x: &[f64]| -> Vec<f64> {
        // w = Aᵀ (b − A x), the negative gradient of ½‖Ax − b‖²
        let mut resid = b.clone();
        for i in 0..m {
            let row = &a[i * n..(i + 1) * n];
            resid[i] -= row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>();
        }
        let mut w = vec![0.0; n];
        for i in 0..m {
            let row = &a[i * n..(i + 1) * n];
            for (wj, &aij) in w.iter_mut().zip(row) {
                *wj += aij * resid[i];
            }
        }
        w
    };

    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0)
        * b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-13 * scale * (m as f64).max(1.0);

    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut w = gradient(&x);
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate else { break };
        passive[t] = true;

        loop {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sol = lstsq_columns(&a, m, n, &cols, &b);
            let mut s = vec![0.0; n];
            for (&c, &v) in cols.iter().zip(&sol) {
                s[c] = v;
            }
            if cols.iter().all(|&j| s[j] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            let mut blocking = cols[0];
            for &j in &cols {
                if s[j] <= 0.0 {
                    let step = x[j] / (x[j] - s[j]);
                    if step < alpha {
                        alpha = step;
                        blocking = j;
                    }
                }
            }
            for j in 0..n {
                x[j] += alpha * (s[j] - x[j]);
            }
            x[blocking] = 0.0;
            for &j in &cols {
                if x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        w = gradient(&x);
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}

/// Objective `‖A w − b‖²`.
pub fn residual_sq(a: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>, w: &[f64]) -> f64 {
    a.rows()
        .into_iter()
        .zip(b.iter())
        .map(|(row, &bi)| {
            let fit: f64 = row.iter().zip(w).map(|(x, y)| x * y).sum();
            (fit - bi).powi(2)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};

    #[test]
    fn identity_truncates_negative_component() {
        let a = Array2::<f64>::eye(2);
        assert_eq!(nnls(a.view(), array![1.0, -1.0].view()), vec![1.0, 0.0]);
        let w = nnls(a.view(), array![0.3, 0.7].view());
        assert!((w[0] - 0.3).abs() < 1e-15 && (w[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(nnls(a.view(), Array1::zeros(3).view()), vec![0.0, 0.0]);
    }

    #[test]
    fn collinear_columns_stay_feasible() {
        let a = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let b = array![1.0, 2.0, 3.0];
        let w = nnls(a.view(), b.view());
        assert!(w.iter().all(|&v| v >= 0.0));
        assert!(residual_sq(a.view(), b.view(), &w) < 1e-20);
    }
}
