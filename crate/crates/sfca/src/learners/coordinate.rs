//! Cyclic coordinate descent for the lasso and penalized logistic
//! regression (quadratic-approximation outer loop).

use super::{standardize, ModelParams};
use crate::error::{Result, SfcaError};

pub const CD_TOL: f64 = 1e-7;
pub const CD_MAX_SWEEPS: usize = 10_000;
const IRLS_MAX_ITERS: usize = 100;
const IRLS_TOL: f64 = 1e-9;

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Weighted lasso on a standardized design with centered response:
/// minimize `(1/2W) sum_i w_i (r_i)^2 + lambda * sum_j |b_j|`.
/// Returns slope coefficients on the standardized scale.
fn lasso_cd_standardized(
    xs: &[Vec<f64>],
    y_centered: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<Vec<f64>> {
    let n = xs.len();
    let m = xs[0].len();
    let wi = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let w_total: f64 = (0..n).map(wi).sum();
    // Per-column weighted second moments.
    let z: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| wi(i) * xs[i][j] * xs[i][j]).sum::<f64>() / w_total)
        .collect();
    let mut beta = vec![0.0; m];
    let mut residual = y_centered.to_vec();
    for sweep in 0..CD_MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for j in 0..m {
            if z[j] <= 1e-14 {
                continue;
            }
            let rho: f64 = (0..n).map(|i| wi(i) * xs[i][j] * residual[i]).sum::<f64>() / w_total
                + z[j] * beta[j];
            let new = soft_threshold(rho, lambda) / z[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                for i in 0..n {
                    residual[i] -= delta * xs[i][j];
                }
                beta[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < CD_TOL {
            return Ok(beta);
        }
        if sweep == CD_MAX_SWEEPS - 1 {
            return Err(SfcaError::NotConverged {
                iterations: CD_MAX_SWEEPS,
            });
        }
    }
    Ok(beta)
}

/// The lambda at and above which all lasso slopes are exactly zero.
pub fn lasso_lambda_max(x: &[Vec<f64>], y: &[f64], weights: Option<&[f64]>) -> f64 {
    let (xs, _) = standardize(x, weights);
    let n = x.len();
    let wi = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let w_total: f64 = (0..n).map(wi).sum();
    let y_mean: f64 = (0..n).map(|i| wi(i) * y[i]).sum::<f64>() / w_total;
    let m = xs[0].len();
    (0..m)
        .map(|j| {
            ((0..n)
                .map(|i| wi(i) * xs[i][j] * (y[i] - y_mean))
                .sum::<f64>()
                / w_total)
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Lasso on the raw scale: standardize internally, solve by cyclic
/// coordinate descent, map coefficients back.
pub fn fit_lasso(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<ModelParams> {
    let n = x.len();
    let (xs, st) = standardize(x, weights);
    let wi = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let w_total: f64 = (0..n).map(wi).sum();
    let y_mean: f64 = (0..n).map(|i| wi(i) * y[i]).sum::<f64>() / w_total;
    let y_centered: Vec<f64> = y.iter().map(|&v| v - y_mean).collect();
    let beta_std = lasso_cd_standardized(&xs, &y_centered, weights, lambda)?;
    let coefficients: Vec<f64> = beta_std
        .iter()
        .enumerate()
        .map(|(j, &b)| b / st.scales[j])
        .collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&st.means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok(ModelParams::Linear {
        intercept,
        coefficients,
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Ridge-penalized logistic regression by Newton iteration on the
/// penalized log-likelihood (intercept unpenalized).
pub fn fit_logistic_ridge(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<ModelParams> {
    use nalgebra::{DMatrix, DVector};
    let n = x.len();
    let m = x[0].len();
    let wi = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let w_total: f64 = (0..n).map(wi).sum();
    let (xs, st) = standardize(x, weights);
    let mut beta = DVector::<f64>::zeros(m + 1);
    for _ in 0..IRLS_MAX_ITERS {
        let eta: Vec<f64> = (0..n)
            .map(|i| {
                beta[0]
                    + (0..m)
                        .map(|j| beta[j + 1] * xs[i][j])
                        .sum::<f64>()
            })
            .collect();
        let p: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        // Penalized gradient and Hessian (average log-likelihood scale).
        let mut grad = DVector::<f64>::zeros(m + 1);
        let mut hess = DMatrix::<f64>::zeros(m + 1, m + 1);
        for i in 0..n {
            let w = wi(i) / w_total;
            let r = y[i] - p[i];
            let s = (p[i] * (1.0 - p[i])).max(1e-10);
            let mut row = Vec::with_capacity(m + 1);
            row.push(1.0);
            row.extend_from_slice(&xs[i]);
            for a in 0..=m {
                grad[a] += w * r * row[a];
                for b in 0..=m {
                    hess[(a, b)] += w * s * row[a] * row[b];
                }
            }
        }
        for j in 1..=m {
            grad[j] -= lambda * beta[j];
            hess[(j, j)] += lambda;
        }
        let step = hess
            .clone()
            .cholesky()
            .map(|c| c.solve(&grad))
            .unwrap_or_else(|| {
                hess.svd(true, true).pseudo_inverse(1e-12).expect("svd") * &grad
            });
        let delta = step.amax();
        beta += step;
        if delta < IRLS_TOL {
            break;
        }
    }
    // Map standardized coefficients back to the raw scale.
    let coefficients: Vec<f64> = (0..m).map(|j| beta[j + 1] / st.scales[j]).collect();
    let intercept = beta[0]
        - coefficients
            .iter()
            .zip(&st.means)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    Ok(ModelParams::Logistic {
        intercept,
        coefficients,
    })
}

/// Lasso-penalized logistic regression: outer quadratic approximation,
/// inner weighted coordinate descent (working response form).
pub fn fit_logistic_lasso(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<ModelParams> {
    let n = x.len();
    let m = x[0].len();
    let wi = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let (xs, st) = standardize(x, weights);
    let mut intercept = 0.0f64;
    let mut beta = vec![0.0f64; m];
    for _ in 0..IRLS_MAX_ITERS {
        let eta: Vec<f64> = (0..n)
            .map(|i| {
                intercept
                    + (0..m)
                        .map(|j| beta[j] * xs[i][j])
                        .sum::<f64>()
            })
            .collect();
        let p: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        // Working weights and response of the quadratic approximation.
        let irls_w: Vec<f64> = (0..n)
            .map(|i| wi(i) * (p[i] * (1.0 - p[i])).max(1e-6))
            .collect();
        let z: Vec<f64> = (0..n)
            .map(|i| eta[i] + (y[i] - p[i]) / (p[i] * (1.0 - p[i])).max(1e-6))
            .collect();
        let w_total: f64 = irls_w.iter().sum();
        let z_mean: f64 = (0..n).map(|i| irls_w[i] * z[i]).sum::<f64>() / w_total;
        // Solve the weighted lasso on the centered working response.
        let y_work: Vec<f64> = (0..n).map(|i| z[i] - z_mean).collect();
        let new_beta = lasso_cd_standardized(&xs, &y_work, Some(&irls_w), lambda)?;
        let new_intercept = z_mean
            - (0..m)
                .map(|j| {
                    new_beta[j]
                        * ((0..n).map(|i| irls_w[i] * xs[i][j]).sum::<f64>() / w_total)
                })
                .sum::<f64>();
        let delta = (new_intercept - intercept).abs().max(
            new_beta
                .iter()
                .zip(&beta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max),
        );
        beta = new_beta;
        intercept = new_intercept;
        if delta < 1e-8 {
            break;
        }
    }
    let coefficients: Vec<f64> = (0..m).map(|j| beta[j] / st.scales[j]).collect();
    let intercept = intercept
        - coefficients
            .iter()
            .zip(&st.means)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    Ok(ModelParams::Logistic {
        intercept,
        coefficients,
    })
}

/// Lasso KKT residuals on the standardized problem: for each column the
/// gradient `(1/W) sum_i w_i x_ij r_i`; at an optimum its magnitude is at
/// most lambda, with equality (against the sign) on active coefficients.
pub fn lasso_kkt_gradients(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    params: &ModelParams,
) -> Vec<(f64, f64)> {
    let (intercept, coefficients) = match params {
        ModelParams::Linear {
            intercept,
            coefficients,
        } => (*intercept, coefficients.clone()),
        _ => panic!("lasso params expected"),
    };
    let n = x.len();
    let m = x[0].len();
    let wi = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let w_total: f64 = (0..n).map(wi).sum();
    let (xs, st) = standardize(x, weights);
    // Coefficients on the standardized scale.
    let beta_std: Vec<f64> = (0..m).map(|j| coefficients[j] * st.scales[j]).collect();
    let residual: Vec<f64> = (0..n)
        .map(|i| {
            y[i] - intercept
                - coefficients
                    .iter()
                    .zip(&x[i])
                    .map(|(c, v)| c * v)
                    .sum::<f64>()
        })
        .collect();
    (0..m)
        .map(|j| {
            let g = (0..n)
                .map(|i| wi(i) * xs[i][j] * residual[i])
                .sum::<f64>()
                / w_total;
            (g, beta_std[j])
        })
        .collect()
}
