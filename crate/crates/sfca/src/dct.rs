//! Orthonormal type-2 discrete cosine transform and its inverse.
//!
//! Direct O(n^2) evaluation; series here are at most a few hundred points.

use std::f64::consts::PI;

/// Orthonormal DCT-II: `C[k] = w(k) * sum_j x[j] cos(pi (j + 1/2) k / n)`.
pub fn dct(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    for k in 0..n {
        let mut acc = 0.0;
        for (j, &v) in x.iter().enumerate() {
            acc += v * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos();
        }
        out[k] = acc * if k == 0 { scale0 } else { scale };
    }
    out
}

/// Inverse of [`dct`] (orthonormal DCT-III).
pub fn idct(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n];
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = c[0] * scale0;
        for (k, &v) in c.iter().enumerate().skip(1) {
            acc += v * scale * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos();
        }
        *o = acc;
    }
    out
}

/// The k-th (0-based) orthonormal DCT-II basis vector of length n.
pub fn basis_vector(n: usize, k: usize) -> Vec<f64> {
    let scale = if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    };
    (0..n)
        .map(|j| scale * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos())
        .collect()
}
