//! Natural cubic spline interpolation.

use crate::error::{Result, SfcaError};

/// Natural cubic spline over strictly increasing knots. Evaluation outside
/// the knot range extrapolates linearly with the boundary slope.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends).
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() {
            return Err(SfcaError::DimensionMismatch(format!(
                "spline knots {} vs values {}",
                n,
                ys.len()
            )));
        }
        if n < 2 {
            return Err(SfcaError::SeriesTooShort { need: 2, got: n });
        }
        for (i, w) in xs.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(SfcaError::DimensionMismatch(format!(
                    "spline knots not strictly increasing at {i}"
                )));
            }
        }
        for (i, &v) in xs.iter().chain(ys.iter()).enumerate() {
            if !v.is_finite() {
                return Err(SfcaError::NonFinite(i % n));
            }
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut sub = vec![0.0; k];
            let mut sup = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                sub[i] = h0;
                sup[i] = h1;
                rhs[i] =
                    6.0 * ((ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0);
            }
            // Thomas algorithm.
            for i in 1..k {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - sup[i] * sol[i + 1]) / diag[i];
            }
            m[1..=k].copy_from_slice(&sol);
        }
        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.slope_at_knot(0) * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.slope_at_knot(n - 1) * (x - self.xs[n - 1]);
        }
        let i = match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    fn slope_at_knot(&self, i: usize) -> f64 {
        let n = self.xs.len();
        if i == 0 {
            let h = self.xs[1] - self.xs[0];
            (self.ys[1] - self.ys[0]) / h - h * (2.0 * self.m[0] + self.m[1]) / 6.0
        } else {
            let h = self.xs[n - 1] - self.xs[n - 2];
            (self.ys[n - 1] - self.ys[n - 2]) / h + h * (self.m[n - 2] + 2.0 * self.m[n - 1]) / 6.0
        }
    }

    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knot_values() {
        let xs = [0.0, 1.0, 2.5, 4.0, 7.0];
        let ys = [1.0, -2.0, 0.5, 3.0, 3.0];
        let sp = CubicSpline::fit(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((sp.eval(*x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_linear_data_everywhere() {
        let xs: Vec<f64> = (0..24).map(|i| 30.0 + 60.0 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 5.0).collect();
        let sp = CubicSpline::fit(&xs, &ys).unwrap();
        for s in 0..96 {
            let x = 7.5 + 15.0 * s as f64;
            assert!((sp.eval(x) - (2.0 * x - 5.0)).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn constant_data() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys = vec![4.2; 10];
        let sp = CubicSpline::fit(&xs, &ys).unwrap();
        for x in [-1.0, 0.3, 5.5, 12.0] {
            assert!((sp.eval(x) - 4.2).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::fit(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(CubicSpline::fit(&[0.0], &[1.0]).is_err());
        assert!(CubicSpline::fit(&[0.0, 1.0], &[f64::NAN, 1.0]).is_err());
    }
}
