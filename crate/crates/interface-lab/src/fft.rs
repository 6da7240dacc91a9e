//! Fourier collocation utilities on the periodic interval [0, 2π).
//!
//! All routines act on real samples taken at the equispaced nodes
//! `α_j = 2πj/n` and use the coefficient convention
//! `f(α) = Σ_m ĉ_m e^{imα}` with `ĉ_m = (1/n) Σ_j f_j e^{-imα_j}`.
//! Coefficients are stored in FFT index order: slot `k` holds mode
//! `m = k` for `k ≤ n/2` and `m = k - n` otherwise; for even `n` the
//! Nyquist slot `k = n/2` is treated as a pure cosine mode.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

static PLANS: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut plans = PLANS.lock().unwrap();
    plans
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Signed wavenumber stored in FFT slot `k` of a length-`n` spectrum.
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if 2 * k <= n {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Forward transform of real samples; returns coefficients `ĉ` in FFT order.
pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, false).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse transform back to real samples (imaginary parts are discarded).
pub fn inverse(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    plan(n, true).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Applies a Fourier multiplier `m ↦ σ(m)` to real samples.
pub fn apply_symbol(values: &[f64], symbol: impl Fn(i64) -> Complex64) -> Vec<f64> {
    let n = values.len();
    let mut coeffs = forward(values);
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= symbol(wavenumber(k, n));
    }
    inverse(&coeffs)
}

/// Spectral derivative of the given order. Odd orders zero the Nyquist mode.
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    apply_symbol(values, |m| {
        if order % 2 == 1 && n % 2 == 0 && m == -(n as i64) / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, m as f64).powu(order)
        }
    })
}

/// Zeroes all modes with `|m| > n/3` in place; returns the removed L2 mass
/// `(Σ' |ĉ_m|²)^{1/2}` measured in the coefficient norm.
pub fn two_thirds_filter(values: &mut [f64]) -> f64 {
    let n = values.len();
    let cutoff = (n / 3) as i64;
    let mut coeffs = forward(values);
    let mut removed = 0.0;
    for (k, c) in coeffs.iter_mut().enumerate() {
        if wavenumber(k, n).abs() > cutoff {
            removed += c.norm_sqr();
            *c = Complex64::new(0.0, 0.0);
        }
    }
    let out = inverse(&coeffs);
    values.copy_from_slice(&out);
    removed.sqrt()
}

/// Periodic antiderivative of the mean-free part, normalized to spectral mean
/// zero. Returns `(mean of f, P)` where `P' = f - mean`.
pub fn antiderivative(values: &[f64]) -> (f64, Vec<f64>) {
    let n = values.len();
    let mut coeffs = forward(values);
    let mean = coeffs[0].re;
    coeffs[0] = Complex64::new(0.0, 0.0);
    for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
        let m = wavenumber(k, n);
        if n % 2 == 0 && m == -(n as i64) / 2 {
            // cos(nα/2) integrates to a representable sine only off the grid;
            // its antiderivative vanishes at every node.
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, m as f64);
        }
    }
    (mean, inverse(&coeffs))
}

/// Trigonometric interpolant of real samples, evaluable anywhere.
#[derive(Clone, Debug)]
pub struct TrigInterp {
    coeffs: Vec<Complex64>,
}

impl TrigInterp {
    pub fn new(values: &[f64]) -> Self {
        Self {
            coeffs: forward(values),
        }
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Evaluates the interpolant (derivative of the given order) at `alpha`.
    pub fn eval_deriv(&self, alpha: f64, order: u32) -> f64 {
        let n = self.coeffs.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            let m = wavenumber(k, n);
            let factor = if order == 0 {
                Complex64::new(1.0, 0.0)
            } else if order % 2 == 1 && n % 2 == 0 && m == -(n as i64) / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, m as f64).powu(order)
            };
            acc += c * factor * Complex64::new(0.0, m as f64 * alpha).exp();
        }
        acc.re
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.eval_deriv(alpha, 0)
    }
}

/// Real cosine/sine coefficients `(a_0, [(a_m, b_m)])` of the interpolant
/// through `values`, truncated at mode `max_mode`.
pub fn real_coefficients(values: &[f64], max_mode: usize) -> (f64, Vec<(f64, f64)>) {
    let n = values.len();
    let coeffs = forward(values);
    let a0 = coeffs[0].re;
    let mut pairs = Vec::with_capacity(max_mode);
    for m in 1..=max_mode {
        if m < coeffs.len() && 2 * m < n {
            let c = coeffs[m];
            pairs.push((2.0 * c.re, -2.0 * c.im));
        } else {
            pairs.push((0.0, 0.0));
        }
    }
    (a0, pairs)
}

/// Samples `a_0 + Σ a_m cos(mα) + b_m sin(mα)` at `n` equispaced nodes.
pub fn sample_real_coefficients(a0: f64, pairs: &[(f64, f64)], n: usize) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    coeffs[0] = Complex64::new(a0, 0.0);
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        let m = idx + 1;
        if 2 * m >= n {
            continue;
        }
        coeffs[m] = Complex64::new(a / 2.0, -b / 2.0);
        coeffs[n - m] = Complex64::new(a / 2.0, b / 2.0);
    }
    inverse(&coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64)
            .collect()
    }

    #[test]
    fn derivative_of_single_mode_is_exact() {
        let n = 32;
        let f: Vec<f64> = nodes(n).iter().map(|&a| (3.0 * a).sin()).collect();
        let df = derivative(&f, 1);
        for (j, &a) in nodes(n).iter().enumerate() {
            let expect = 3.0 * (3.0 * a).cos();
            assert!(
                (df[j] - expect).abs() < 1e-12,
                "node {j}: got {} want {expect}",
                df[j]
            );
        }
    }

    #[test]
    fn second_derivative_matches_symbol() {
        let n = 64;
        let f: Vec<f64> = nodes(n).iter().map(|&a| (5.0 * a).cos() + a.sin()).collect();
        let d2 = derivative(&f, 2);
        for (j, &a) in nodes(n).iter().enumerate() {
            let expect = -25.0 * (5.0 * a).cos() - a.sin();
            assert!((d2[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_preserves_samples() {
        let n = 48;
        let f: Vec<f64> = nodes(n)
            .iter()
            .map(|&a| (2.0 * a).sin() * (a.cos() + 1.5))
            .collect();
        let back = inverse(&forward(&f));
        for j in 0..n {
            assert!((back[j] - f[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolant_evaluates_off_grid() {
        let n = 40;
        let f: Vec<f64> = nodes(n).iter().map(|&a| (4.0 * a).cos() - 2.0 * a.sin()).collect();
        let interp = TrigInterp::new(&f);
        for &alpha in &[0.13, 1.7, 3.9, 6.0] {
            let expect = (4.0f64 * alpha).cos() - 2.0 * alpha.sin();
            assert!((interp.eval(alpha) - expect).abs() < 1e-12);
            let expect_d = -4.0 * (4.0f64 * alpha).sin() - 2.0 * alpha.cos();
            assert!((interp.eval_deriv(alpha, 1) - expect_d).abs() < 1e-11);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let n = 36;
        let f: Vec<f64> = nodes(n).iter().map(|&a| 2.0 + (3.0 * a).cos()).collect();
        let (mean, p) = antiderivative(&f);
        assert!((mean - 2.0).abs() < 1e-13);
        let dp = derivative(&p, 1);
        for j in 0..n {
            assert!((dp[j] - (f[j] - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_removes_high_modes_only() {
        let n = 48;
        let mut f: Vec<f64> = nodes(n)
            .iter()
            .map(|&a| (2.0 * a).cos() + 0.5 * (20.0 * a).sin())
            .collect();
        let removed = two_thirds_filter(&mut f);
        assert!(removed > 0.3 && removed < 0.4, "removed {removed}");
        for (j, &a) in nodes(n).iter().enumerate() {
            assert!((f[j] - (2.0 * a).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn real_coefficient_round_trip() {
        let n = 32;
        let f: Vec<f64> = nodes(n)
            .iter()
            .map(|&a| 1.0 - 0.3 * (2.0 * a).cos() + 0.7 * (5.0 * a).sin())
            .collect();
        let (a0, pairs) = real_coefficients(&f, 10);
        let back = sample_real_coefficients(a0, &pairs, n);
        for j in 0..n {
            assert!((back[j] - f[j]).abs() < 1e-12);
        }
    }
}
