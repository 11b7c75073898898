//! Discrete wavelet transform with symmetric (half-point) boundary
//! extension, symlet filter banks, multi-level approximation compression,
//! and finest-scale de-noising.

use crate::error::{Result, SfcaError};

/// Symlet family members used in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symlet {
    Sym3,
    Sym8,
}

impl Symlet {
    /// Decomposition low-pass filter (scaling analysis filter).
    pub fn dec_lo(self) -> &'static [f64] {
        match self {
            Symlet::Sym3 => &SYM3_DEC_LO,
            Symlet::Sym8 => &SYM8_DEC_LO,
        }
    }

    pub fn filter_len(self) -> usize {
        self.dec_lo().len()
    }
}

const SYM3_DEC_LO: [f64; 6] = [
    0.035226291882100656,
    -0.085441273882241486,
    -0.13501102001039084,
    0.45987750211933132,
    0.80689150931333875,
    0.33267055295095688,
];

const SYM8_DEC_LO: [f64; 16] = [
    -0.0033824159510061256,
    -0.00054213233179114812,
    0.031695087811492981,
    0.0076074873249176054,
    -0.14329423835080971,
    -0.061273359067658524,
    0.48135965125837221,
    0.77718575170052351,
    0.3644418948353314,
    -0.051945838107709037,
    -0.027219029917056003,
    0.049137179673607506,
    0.0038087520138906151,
    -0.014952258337048231,
    -0.0003029205147213668,
    0.0018899503327594609,
];

struct FilterBank {
    dec_lo: Vec<f64>,
    dec_hi: Vec<f64>,
    rec_lo: Vec<f64>,
    rec_hi: Vec<f64>,
}

fn filter_bank(w: Symlet) -> FilterBank {
    let dec_lo: Vec<f64> = w.dec_lo().to_vec();
    let l = dec_lo.len();
    let rec_lo: Vec<f64> = dec_lo.iter().rev().copied().collect();
    let dec_hi: Vec<f64> = (0..l)
        .map(|k| if k % 2 == 0 { rec_lo[k] } else { -rec_lo[k] })
        .collect();
    let rec_hi: Vec<f64> = dec_hi.iter().rev().copied().collect();
    FilterBank {
        dec_lo,
        dec_hi,
        rec_lo,
        rec_hi,
    }
}

/// Half-point symmetric extension by `pad` samples on each side:
/// `... x2 x1 x0 | x0 x1 ... | x(n-1) x(n-2) ...`
fn extend_sym(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let reflect = |j: isize| -> f64 {
        let mut j = j;
        // Fold repeatedly for pads longer than the signal.
        loop {
            if j < 0 {
                j = -j - 1;
            } else if j >= n as isize {
                j = 2 * n as isize - 1 - j;
            } else {
                return x[j as usize];
            }
        }
    };
    (-(pad as isize)..(n + pad) as isize).map(reflect).collect()
}

/// One analysis step against one filter: extend, convolve (valid), keep the
/// odd-indexed samples. Output length is `floor((n + l - 1) / 2)`.
fn analysis(x: &[f64], filt: &[f64]) -> Vec<f64> {
    let n = x.len();
    let l = filt.len();
    let ext = extend_sym(x, l - 1);
    let kept = n + l - 1;
    let out_len = kept / 2;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let k = 2 * i + 1;
        let mut acc = 0.0;
        for (f, &c) in filt.iter().enumerate() {
            acc += c * ext[k + l - 1 - f];
        }
        out.push(acc);
    }
    out
}

/// Dyadic upsample, convolve with the reconstruction filter, keep the
/// central `target` samples.
fn synthesis(coeffs: &[f64], filt: &[f64], target: usize) -> Vec<f64> {
    let la = coeffs.len();
    let l = filt.len();
    let up_len = if la == 0 { 0 } else { 2 * la - 1 };
    let mut up = vec![0.0; up_len];
    for (i, &c) in coeffs.iter().enumerate() {
        up[2 * i] = c;
    }
    let full_len = up_len + l - 1;
    let mut full = vec![0.0; full_len];
    for (k, slot) in full.iter_mut().enumerate() {
        let lo = k.saturating_sub(l - 1);
        let hi = k.min(up_len - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += up[j] * filt[k - j];
        }
        *slot = acc;
    }
    let start = (full_len - target) / 2;
    full[start..start + target].to_vec()
}

/// Single-level DWT: returns (approximation, detail) coefficients.
pub fn dwt(x: &[f64], wavelet: Symlet) -> Result<(Vec<f64>, Vec<f64>)> {
    let l = wavelet.filter_len();
    if x.len() < l {
        return Err(SfcaError::InfeasibleWaveletLevel {
            level: 1,
            len: x.len(),
            filter_len: l,
        });
    }
    let fb = filter_bank(wavelet);
    Ok((analysis(x, &fb.dec_lo), analysis(x, &fb.dec_hi)))
}

/// Single-level inverse DWT back to `target_len` samples.
pub fn idwt(approx: &[f64], detail: &[f64], wavelet: Symlet, target_len: usize) -> Vec<f64> {
    let fb = filter_bank(wavelet);
    let a = synthesis(approx, &fb.rec_lo, target_len);
    let d = synthesis(detail, &fb.rec_hi, target_len);
    a.iter().zip(&d).map(|(x, y)| x + y).collect()
}

/// Multi-level decomposition keeping only the final approximation band:
/// the wavelet compression of the series.
pub fn wavelet_approx(series: &[f64], wavelet: Symlet, level: usize) -> Result<Vec<f64>> {
    if level == 0 {
        return Err(SfcaError::InfeasibleWaveletLevel {
            level,
            len: series.len(),
            filter_len: wavelet.filter_len(),
        });
    }
    for (i, &v) in series.iter().enumerate() {
        if !v.is_finite() {
            return Err(SfcaError::NonFinite(i));
        }
    }
    let mut cur = series.to_vec();
    for step in 0..level {
        if cur.len() < wavelet.filter_len() {
            return Err(SfcaError::InfeasibleWaveletLevel {
                level: step + 1,
                len: cur.len(),
                filter_len: wavelet.filter_len(),
            });
        }
        let (a, _) = dwt(&cur, wavelet)?;
        cur = a;
    }
    Ok(cur)
}

/// Zero the level-1 detail band and reconstruct: hard smoothing at the
/// finest scale only.
pub fn denoise_level1(series: &[f64], wavelet: Symlet) -> Result<Vec<f64>> {
    let (a, d) = dwt(series, wavelet)?;
    let zeros = vec![0.0; d.len()];
    Ok(idwt(&a, &zeros, wavelet, series.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_signal(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn filters_are_orthonormal() {
        for w in [Symlet::Sym3, Symlet::Sym8] {
            let h = w.dec_lo();
            let sum: f64 = h.iter().sum();
            let energy: f64 = h.iter().map(|v| v * v).sum();
            assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-10);
            assert!((energy - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn perfect_reconstruction() {
        for w in [Symlet::Sym3, Symlet::Sym8] {
            for n in [17usize, 20, 50, 96, 101, 672] {
                if n < w.filter_len() {
                    continue;
                }
                let x = pseudo_signal(n, n as u64);
                let (a, d) = dwt(&x, w).unwrap();
                let back = idwt(&a, &d, w, n);
                assert_eq!(back.len(), n);
                for (u, v) in x.iter().zip(&back) {
                    assert!((u - v).abs() < 1e-10, "n={n} w={w:?}");
                }
            }
        }
    }

    #[test]
    fn coefficient_counts_match_recurrence() {
        // 672 -> 338 -> 171 -> 88 -> 46 -> 25 -> 15 -> 10
        let x = pseudo_signal(672, 7);
        assert_eq!(wavelet_approx(&x, Symlet::Sym3, 7).unwrap().len(), 10);
        // 96 -> 50 -> 27 -> 16 -> 10 -> 7 -> 6
        let y = pseudo_signal(96, 9);
        assert_eq!(wavelet_approx(&y, Symlet::Sym3, 6).unwrap().len(), 6);
    }

    #[test]
    fn infeasible_level_rejected() {
        let x = pseudo_signal(96, 3);
        // 96 collapses to 5 at level 7; the next step would need >= 6 inputs.
        assert!(wavelet_approx(&x, Symlet::Sym3, 8).is_err());
        assert!(wavelet_approx(&x, Symlet::Sym3, 0).is_err());
        assert!(wavelet_approx(&[1.0; 10], Symlet::Sym8, 1).is_err());
    }

    #[test]
    fn compression_is_linear() {
        let x = pseudo_signal(672, 11);
        let alpha = 3.7;
        let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let cx = wavelet_approx(&x, Symlet::Sym3, 7).unwrap();
        let cs = wavelet_approx(&scaled, Symlet::Sym3, 7).unwrap();
        for (a, b) in cx.iter().zip(&cs) {
            assert!((alpha * a - b).abs() < 1e-9);
        }
        let zeros = wavelet_approx(&vec![0.0; 672], Symlet::Sym3, 7).unwrap();
        assert!(zeros.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn denoise_preserves_length_and_smooth_signals() {
        let n = 95;
        let smooth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.05).sin()).collect();
        let den = denoise_level1(&smooth, Symlet::Sym8).unwrap();
        assert_eq!(den.len(), n);
        for (a, b) in smooth.iter().zip(&den) {
            assert!((a - b).abs() < 0.01);
        }
    }
}
