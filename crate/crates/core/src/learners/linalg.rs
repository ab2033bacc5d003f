//! Small dense solvers for the learners. Matrices are row-major slices.

/// Solves `A x = b` for symmetric positive definite `A` (d × d, row-major).
/// Returns `None` when a pivot is not positive.
pub(crate) fn cholesky_solve(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    let mut z = vec![0.0; d];
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * d + k] * z[k];
        }
        z[i] = sum / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = z[i];
        for k in i + 1..d {
            sum -= l[k * d + i] * x[k];
        }
        x[i] = sum / l[i * d + i];
    }
    Some(x)
}

/// Least-squares solution of `A[:, cols] s = b` by Householder QR, where `a`
/// is m × n row-major. Columns whose diagonal after reflection is negligible
/// get a zero coefficient.
pub(crate) fn lstsq_columns(a: &[f64], m: usize, n: usize, cols: &[usize], b: &[f64]) -> Vec<f64> {
    let k = cols.len();
    // column-major copy of the selected columns
    let mut q: Vec<Vec<f64>> = cols.iter().map(|&c| (0..m).map(|i| a[i * n + c]).collect()).collect();
    let mut rhs = b.to_vec();
    let scale = q
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut diag = vec![0.0; k];
    let steps = k.min(m);
    for j in 0..steps {
        let norm = q[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-14 * scale {
            diag[j] = 0.0;
            continue;
        }
        let alpha = if q[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = q[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in q.iter_mut().skip(j) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vnorm2;
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&rhs[j..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (r, vi) in rhs[j..].iter_mut().zip(&v) {
                *r -= f * vi;
            }
        }
        diag[j] = q[j][j];
    }
    let mut s = vec![0.0; k];
    for j in (0..steps).rev() {
        if diag[j].abs() <= 1e-14 * scale {
            continue;
        }
        let mut sum = rhs[j];
        for l in j + 1..steps {
            sum -= q[l][j] * s[l];
        }
        s[j] = sum / diag[j];
    }
    s
}
