//! Ridge-stabilized logistic regression fitted by iteratively reweighted
//! least squares (Newton–Raphson with step halving).

use ndarray::ArrayView2;

use super::linalg::cholesky_solve;
use super::{logit, sigmoid, PROB_CLIP};

pub const DEFAULT_RIDGE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;
const DEVIANCE_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct IrlsFit {
    /// Intercept first, then one coefficient per design column.
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap was hit before convergence.
    pub converged: bool,
    /// Euclidean norm of the penalized log-likelihood gradient at the result.
    pub gradient_norm: f64,
    /// Penalized log-likelihood after each accepted iterate (first entry is
    /// the starting point).
    pub objective_trace: Vec<f64>,
}

/// Row-major design with a leading intercept column.
pub(crate) struct Design {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Design {
    pub fn new(x: ArrayView2<'_, f64>, interactions: bool) -> Self {
        let rows = x.nrows();
        let mut values = Vec::new();
        let mut cols = 0;
        for row in x.rows() {
            let start = values.len();
            values.push(1.0);
            expand_into(&row.to_vec(), interactions, &mut values);
            cols = values.len() - start;
        }
        if rows == 0 {
            cols = 1 + expanded_width(x.ncols(), interactions);
        }
        Self { rows, cols, values }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

pub(crate) fn expanded_width(p: usize, interactions: bool) -> usize {
    if interactions {
        p + p * p.saturating_sub(1) / 2
    } else {
        p
    }
}

/// Appends main effects and, optionally, all pairwise products.
pub(crate) fn expand_into(x: &[f64], interactions: bool, out: &mut Vec<f64>) {
    out.extend_from_slice(x);
    if interactions {
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                out.push(x[i] * x[j]);
            }
        }
    }
}

fn penalized_loglik(design: &Design, y: &[bool], beta: &[f64], ridge: f64) -> f64 {
    let mut ll = 0.0;
    for (i, &yi) in y.iter().enumerate().take(design.rows) {
        let eta: f64 = design.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
        // log p = -log(1 + e^{-eta}); log(1-p) = -log(1 + e^{eta})
        ll -= if yi { softplus(-eta) } else { softplus(eta) };
    }
    ll - 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn gradient_and_hessian(design: &Design, y: &[bool], beta: &[f64], ridge: f64) -> (Vec<f64>, Vec<f64>) {
    let d = design.cols;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for (i, &yi) in y.iter().enumerate().take(design.rows) {
        let row = design.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let p = sigmoid(eta);
        let r = f64::from(u8::from(yi)) - p;
        let w = p * (1.0 - p);
        for a in 0..d {
            grad[a] += row[a] * r;
            let wa = w * row[a];
            if wa != 0.0 {
                for b in 0..=a {
                    hess[a * d + b] += wa * row[b];
                }
            }
        }
    }
    for a in 0..d {
        grad[a] -= ridge * beta[a];
        hess[a * d + a] += ridge;
        for b in 0..a {
            hess[b * d + a] = hess[a * d + b];
        }
    }
    (grad, hess)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn irls_design(design: &Design, y: &[bool], ridge: f64) -> IrlsFit {
    let d = design.cols;
    let mean = y.iter().filter(|&&v| v).count() as f64 / y.len().max(1) as f64;
    let mut beta = vec![0.0; d];
    beta[0] = logit(mean.clamp(PROB_CLIP, 1.0 - PROB_CLIP));
    let mut obj = penalized_loglik(design, y, &beta, ridge);
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    let (mut grad, mut hess) = gradient_and_hessian(design, y, &beta, ridge);
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let step = match cholesky_solve(&hess, &grad, d) {
            Some(s) => s,
            None => {
                let mut jittered = hess.clone();
                let bump = 1e-8 * (0..d).map(|a| hess[a * d + a]).fold(1.0, f64::max);
                for a in 0..d {
                    jittered[a * d + a] += bump;
                }
                match cholesky_solve(&jittered, &grad, d) {
                    Some(s) => s,
                    None => break,
                }
            }
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let cand_obj = penalized_loglik(design, y, &cand, ridge);
            if cand_obj >= obj {
                accepted = Some((cand, cand_obj));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cand_obj)) = accepted else { break };
        let change = cand_obj - obj;
        beta = cand;
        obj = cand_obj;
        trace.push(obj);
        (grad, hess) = gradient_and_hessian(design, y, &beta, ridge);
        // deviance = -2 loglik
        if 2.0 * change <= DEVIANCE_TOL && norm(&grad) <= GRADIENT_TOL {
            converged = true;
            break;
        }
    }
    let gradient_norm = norm(&grad);
    IrlsFit {
        coefficients: beta,
        iterations,
        converged: converged || gradient_norm <= GRADIENT_TOL,
        gradient_norm,
        objective_trace: trace,
    }
}

/// Maximizes the ridge-penalized logistic log-likelihood
/// `Σ log p(yᵢ | xᵢ) − ridge/2 ‖β‖²` over an intercept plus one coefficient
/// per column of `x`.
pub fn irls_logistic(x: ArrayView2<'_, f64>, y: &[bool], ridge: f64) -> IrlsFit {
    assert_eq!(x.nrows(), y.len(), "one label per row");
    irls_design(&Design::new(x, false), y, ridge)
}

/// Penalized log-likelihood of `coefficients` (intercept first) on `(x, y)`.
pub fn logistic_objective(x: ArrayView2<'_, f64>, y: &[bool], coefficients: &[f64], ridge: f64) -> f64 {
    penalized_loglik(&Design::new(x, false), y, coefficients, ridge)
}
