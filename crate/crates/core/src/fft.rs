//! Thin helpers over `rustfft` shared by filtering, spectral estimation and synthesis.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Cached forward plan of length `n` for the current thread.
pub(crate) fn forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

/// Cached unnormalised inverse plan of length `n`.
pub(crate) fn inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Full linear convolution (`x.len() + h.len() - 1` samples) via one FFT pair.
pub(crate) fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two();
    let fwd = forward(n);
    let inv = inverse(n);

    let mut a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(n, Complex64::default());
    let mut b: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(n, Complex64::default());
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a.truncate(out_len);
    a.into_iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let x = [1.0, -2.0, 3.5, 0.25, 4.0];
        let h = [0.5, 1.0, -1.0];
        let mut direct = vec![0.0; x.len() + h.len() - 1];
        for (i, xv) in x.iter().enumerate() {
            for (j, hv) in h.iter().enumerate() {
                direct[i + j] += xv * hv;
            }
        }
        let fast = convolve(&x, &h);
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
