//! Linear SVM by hinge-loss subgradient descent, with a logistic (Platt)
//! calibration of training margins so predict returns scores in [0,1].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{standardize, ModelParams, ModelSpec};
use crate::error::Result;

const SVM_EPOCHS: usize = 200;
const PLATT_ITERS: usize = 100;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Newton fit of `p = sigmoid(a*margin + b)` on training margins.
fn platt_calibrate(margins: &[f64], y01: &[f64], w: &[f64]) -> (f64, f64) {
    let mut a = 1.0f64;
    let mut b = 0.0f64;
    for _ in 0..PLATT_ITERS {
        let mut g = [0.0f64; 2];
        let mut h = [[0.0f64; 2]; 2];
        for ((&m, &t), &wi) in margins.iter().zip(y01).zip(w) {
            let p = sigmoid(a * m + b);
            let r = t - p;
            let s = (p * (1.0 - p)).max(1e-10);
            g[0] += wi * r * m;
            g[1] += wi * r;
            h[0][0] += wi * s * m * m;
            h[0][1] += wi * s * m;
            h[1][1] += wi * s;
        }
        h[1][0] = h[0][1];
        h[0][0] += 1e-9;
        h[1][1] += 1e-9;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-30 {
            break;
        }
        let da = (g[0] * h[1][1] - g[1] * h[0][1]) / det;
        let db = (g[1] * h[0][0] - g[0] * h[1][0]) / det;
        a += da;
        b += db;
        if da.abs().max(db.abs()) < 1e-10 {
            break;
        }
    }
    (a, b)
}

/// Pegasos-style subgradient descent on
/// `lambda/2 |w|^2 + (1/W) sum_i w_i hinge(y_i f(x_i))`.
pub fn fit_linear_svm(
    x: &[Vec<f64>],
    y01: &[f64],
    weights: Option<&[f64]>,
    spec: &ModelSpec,
) -> Result<ModelParams> {
    let n = x.len();
    let m = x[0].len();
    let w_row: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let w_total: f64 = w_row.iter().sum();
    let (xs, st) = standardize(x, weights);
    let y_pm: Vec<f64> = y01.iter().map(|&t| if t > 0.5 { 1.0 } else { -1.0 }).collect();
    let lambda = spec.lambda.max(1e-6);

    let mut wvec = vec![0.0f64; m];
    let mut bias = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x53564d);
    let mut t = 0usize;
    for _ in 0..SVM_EPOCHS {
        for _ in 0..n {
            t += 1;
            let i = rng.gen_range(0..n);
            let eta = 1.0 / (lambda * t as f64);
            let margin = y_pm[i]
                * (bias + wvec.iter().zip(&xs[i]).map(|(a, b)| a * b).sum::<f64>());
            for wj in wvec.iter_mut() {
                *wj *= 1.0 - eta * lambda;
            }
            if margin < 1.0 {
                let scale = eta * w_row[i] * n as f64 / w_total;
                for (wj, &xj) in wvec.iter_mut().zip(&xs[i]) {
                    *wj += scale * y_pm[i] * xj;
                }
                bias += scale * y_pm[i];
            }
        }
    }

    let margins: Vec<f64> = xs
        .iter()
        .map(|row| bias + wvec.iter().zip(row).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let (pa, pb) = platt_calibrate(&margins, y01, &w_row);

    // Map back to the raw feature scale.
    let coefficients: Vec<f64> = (0..m).map(|j| wvec[j] / st.scales[j]).collect();
    let intercept = bias
        - coefficients
            .iter()
            .zip(&st.means)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    Ok(ModelParams::Svm {
        intercept,
        coefficients,
        platt_a: pa,
        platt_b: pb,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{fit, predict, Family, ModelSpec};

    #[test]
    fn svm_separates_linear_classes() {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let side = if i < 30 { -1.0 } else { 1.0 };
                vec![side * 2.0 + (i % 7) as f64 * 0.05, (i % 5) as f64 * 0.1]
            })
            .collect();
        let y: Vec<f64> = (0..60).map(|i| if i < 30 { 0.0 } else { 1.0 }).collect();
        let mut spec = ModelSpec::new(Family::SvmLinear);
        spec.lambda = 0.001;
        let names = vec!["a".to_string(), "b".to_string()];
        let model = fit(&spec, &x, &y, None, &names).unwrap();
        let scores = predict(&model, &x).unwrap();
        let mut correct = 0;
        for (s, t) in scores.iter().zip(&y) {
            assert!((0.0..=1.0).contains(s));
            if (*s >= 0.5) == (*t >= 0.5) {
                correct += 1;
            }
        }
        assert!(correct >= 58, "only {correct}/60 correct");
    }

    #[test]
    fn svm_deterministic_under_seed() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 - 10.0) * 0.3])
            .collect();
        let y: Vec<f64> = (0..20).map(|i| if i >= 10 { 1.0 } else { 0.0 }).collect();
        let spec = ModelSpec::new(Family::SvmLinear);
        let names = vec!["f".to_string()];
        let m1 = fit(&spec, &x, &y, None, &names).unwrap();
        let m2 = fit(&spec, &x, &y, None, &names).unwrap();
        assert_eq!(m1, m2);
    }
}
