//! OLS and ridge via (regularized) normal equations, with an SVD
//! pseudo-inverse fallback for singular unpenalized systems.

use nalgebra::{DMatrix, DVector};

use super::ModelParams;
use crate::error::Result;

/// Augment with an intercept column and apply sqrt-weight row scaling so
/// ordinary least squares on the result solves the weighted problem.
fn weighted_augmented(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.len();
    let m = x[0].len();
    let mut a = DMatrix::zeros(n, m + 1);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        let sw = weights.map(|w| w[i].sqrt()).unwrap_or(1.0);
        a[(i, 0)] = sw;
        for j in 0..m {
            a[(i, j + 1)] = sw * x[i][j];
        }
        b[i] = sw * y[i];
    }
    (a, b)
}

fn params_from_solution(sol: &DVector<f64>) -> ModelParams {
    ModelParams::Linear {
        intercept: sol[0],
        coefficients: sol.iter().skip(1).copied().collect(),
    }
}

pub fn fit_ols(x: &[Vec<f64>], y: &[f64], weights: Option<&[f64]>) -> Result<ModelParams> {
    let (a, b) = weighted_augmented(x, y, weights);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    match ata.clone().cholesky() {
        Some(chol) => Ok(params_from_solution(&chol.solve(&atb))),
        None => {
            log::warn!("singular normal equations; falling back to pseudo-inverse");
            let pinv = a
                .svd(true, true)
                .pseudo_inverse(1e-10)
                .expect("svd pseudo-inverse");
            Ok(params_from_solution(&(pinv * b)))
        }
    }
}

/// Ridge with the intercept unpenalized. `lambda` scales an identity block
/// over the slope coefficients only.
pub fn fit_ridge(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<ModelParams> {
    let (a, b) = weighted_augmented(x, y, weights);
    let m = x[0].len();
    let mut ata = a.transpose() * &a;
    for j in 1..=m {
        ata[(j, j)] += lambda;
    }
    let atb = a.transpose() * &b;
    match ata.clone().cholesky() {
        Some(chol) => Ok(params_from_solution(&chol.solve(&atb))),
        None => {
            log::warn!("singular ridge system; falling back to pseudo-inverse");
            let pinv = ata.svd(true, true).pseudo_inverse(1e-10).expect("svd");
            Ok(params_from_solution(&(pinv * atb)))
        }
    }
}
