//! Trigonometric (Fourier) differentiation on uniform periodic axes.
//!
//! Exact for band-limited fields; the Nyquist mode of the first derivative
//! is set to zero, the standard convention for even grid sizes.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Cached FFT plans and wavenumbers for one periodic axis.
pub struct SpectralAxis {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Signed wavenumbers `2*pi*k/len`, Nyquist bin zeroed.
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for SpectralAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralAxis").field("n", &self.n).finish()
    }
}

impl SpectralAxis {
    pub fn new(n: usize, len: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut wavenumbers = vec![0.0; n];
        for (i, w) in wavenumbers.iter_mut().enumerate() {
            let k = if i <= n / 2 { i as isize } else { i as isize - n as isize };
            *w = 2.0 * std::f64::consts::PI * k as f64 / len;
        }
        if n % 2 == 0 {
            wavenumbers[n / 2] = 0.0;
        }
        Self { n, fft, ifft, wavenumbers }
    }

    /// First derivative of the values along this axis (stride 1).
    pub fn derivative(&self, values: &[f64], out: &mut [f64]) {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex<f64>> =
            values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        for (b, &k) in buf.iter_mut().zip(&self.wavenumbers) {
            *b *= Complex::new(0.0, k);
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_of_cosine_is_minus_sine() {
        let n = 64;
        let axis = SpectralAxis::new(n, 1.0);
        let values: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let mut out = vec![0.0; n];
        axis.derivative(&values, &mut out);
        for (i, &d) in out.iter().enumerate() {
            let x = i as f64 / n as f64;
            let exact = -2.0 * PI * (2.0 * PI * x).sin();
            assert!((d - exact).abs() < 1e-10, "node {i}: {d} vs {exact}");
        }
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let axis = SpectralAxis::new(32, 2.0);
        let values = vec![3.5; 32];
        let mut out = vec![0.0; 32];
        axis.derivative(&values, &mut out);
        assert!(out.iter().all(|d| d.abs() < 1e-12));
    }
}
