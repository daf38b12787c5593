//! Damped Gauss–Newton least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// 1σ uncertainty.
    pub error: f64,
}

/// Estimates from a fit. When `converged` is false the numbers are the last
/// iterate and should not be trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Parameters only bounded from below by the data.
    pub lower_bounds: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter. Panics on an unknown name.
    pub fn value(&self, name: &str) -> f64 {
        self.param(name).unwrap_or_else(|| panic!("no fit parameter {name:?}")).value
    }

    pub fn error(&self, name: &str) -> f64 {
        self.param(name).unwrap_or_else(|| panic!("no fit parameter {name:?}")).error
    }

    pub(crate) fn push(&mut self, name: &str, value: f64, error: f64) {
        self.params.push(FitParam {
            name: name.to_string(),
            value,
            error,
        });
    }
}

pub(crate) struct Solution {
    pub params: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
}

const MAX_ITER: usize = 500;

fn residuals<F: Fn(&[f64], f64) -> f64>(
    model: &F,
    p: &[f64],
    x: &[f64],
    y: &[f64],
    w: &[f64],
) -> DVector<f64> {
    DVector::from_iterator(x.len(), (0..x.len()).map(|i| (y[i] - model(p, x[i])) * w[i]))
}

fn jacobian<F: Fn(&[f64], f64) -> f64>(model: &F, p: &[f64], x: &[f64], w: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(x.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(1e-6);
        q[k] = p[k] + h;
        let up: Vec<f64> = x.iter().map(|&xi| model(&q, xi)).collect();
        q[k] = p[k] - h;
        for (i, &xi) in x.iter().enumerate() {
            j[(i, k)] = (up[i] - model(&q, xi)) / (2.0 * h) * w[i];
        }
        q[k] = p[k];
    }
    j
}

/// Minimize `Σ ((y - model(p, x)) / σ)²` from `p0`. Without `sigma` all
/// weights are one and the covariance is scaled by the residual variance.
pub(crate) fn solve<F>(model: F, x: &[f64], y: &[f64], sigma: Option<&[f64]>, p0: &[f64]) -> Solution
where
    F: Fn(&[f64], f64) -> f64,
{
    let n = x.len();
    let m = p0.len();
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|v| 1.0 / v.max(1e-300)).collect(),
        None => vec![1.0; n],
    };
    let mut p = p0.to_vec();
    let mut r = residuals(&model, &p, x, y, &w);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut j = jacobian(&model, &p, x, &w);

    while iterations < MAX_ITER && cost.is_finite() {
        iterations += 1;
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        // cosine between the residual and each Jacobian column
        let scaled_grad = (0..m)
            .map(|k| g[k].abs() / (a[(k, k)] * cost).sqrt().max(1e-300))
            .fold(0.0, f64::max);
        if cost < 1e-28 || scaled_grad < 1e-10 {
            converged = true;
            break;
        }
        let mut stepped = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for k in 0..m {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-12);
            }
            let Some(delta) = damped.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let r_trial = residuals(&model, &trial, x, y, &w);
            let c_trial = r_trial.norm_squared();
            if c_trial.is_finite() && c_trial <= cost {
                let small_step = delta
                    .iter()
                    .zip(&p)
                    .all(|(d, v)| d.abs() <= 1e-12 * (v.abs() + 1e-12));
                let small_gain = cost - c_trial <= 1e-15 * cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 10.0).max(1e-12);
                j = jacobian(&model, &p, x, &w);
                stepped = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // no downhill step at any damping: stationary to rounding
            converged = scaled_grad < 1e-5;
            break;
        }
        if converged {
            break;
        }
    }

    let a = j.transpose() * &j;
    let scale = match sigma {
        Some(_) => 1.0,
        None if n > m => cost / (n - m) as f64,
        None => 0.0,
    };
    let cov = a
        .clone()
        .try_inverse()
        .or_else(|| a.pseudo_inverse(1e-14).ok())
        .unwrap_or_else(|| DMatrix::from_element(m, m, f64::NAN))
        * scale;
    Solution {
        params: p,
        cov,
        rss: cost,
        converged,
        iterations,
    }
}
