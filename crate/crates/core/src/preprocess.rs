//! Linear-phase FIR bandpass design and forward-backward (zero-phase) filtering.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::Recording;

pub const DEFAULT_ORDER: usize = 1024;

/// Windowed-sinc FIR kernel with `order + 1` symmetric taps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterKernel {
    taps: Vec<f64>,
    low_hz: f64,
    high_hz: f64,
    fs_hz: f64,
    order: usize,
}

impl FilterKernel {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn low_hz(&self) -> f64 {
        self.low_hz
    }

    pub fn high_hz(&self) -> f64 {
        self.high_hz
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Single-pass magnitude response |H(f)| evaluated directly from the taps.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        magnitude(&self.taps, freq_hz / self.fs_hz)
    }
}

fn magnitude(taps: &[f64], f_norm: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &h) in taps.iter().enumerate() {
        let w = 2.0 * PI * f_norm * n as f64;
        re += h * w.cos();
        im -= h * w.sin();
    }
    re.hypot(im)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc bandpass. The band edges are the -6 dB points of the
/// single-pass response; gain is normalised to exactly 1 at the band centre.
pub fn design_bandpass_fir(low_hz: f64, high_hz: f64, fs_hz: f64, order: usize) -> Result<FilterKernel> {
    let nyquist = fs_hz / 2.0;
    let valid = fs_hz.is_finite() && fs_hz > 0.0 && low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist;
    if !valid {
        return Err(Error::InvalidBand { low_hz, high_hz, fs_hz });
    }
    if order % 2 != 0 || order < 4 {
        return Err(Error::OddOrder(order));
    }

    let f1 = low_hz / fs_hz;
    let f2 = high_hz / fs_hz;
    let mid = order as f64 / 2.0;
    let mut taps: Vec<f64> = (0..=order)
        .map(|n| {
            let t = n as f64 - mid;
            let ideal = 2.0 * f2 * sinc(2.0 * f2 * t) - 2.0 * f1 * sinc(2.0 * f1 * t);
            let window = 0.54 - 0.46 * (2.0 * PI * n as f64 / order as f64).cos();
            ideal * window
        })
        .collect();

    // mirror to make symmetry exact rather than approximate
    for i in 0..order / 2 {
        let v = 0.5 * (taps[i] + taps[order - i]);
        taps[i] = v;
        taps[order - i] = v;
    }

    let gain = magnitude(&taps, 0.5 * (f1 + f2));
    for t in &mut taps {
        *t /= gain;
    }

    Ok(FilterKernel {
        taps,
        low_hz,
        high_hz,
        fs_hz,
        order,
    })
}

/// Forward-backward filtering with odd reflection padding of one kernel
/// length at each end. Output length equals input length; the effective
/// response is |H|^2 with zero group delay.
pub fn filter_zero_phase(signal: &[f64], kernel: &FilterKernel) -> Result<Vec<f64>> {
    let pad = kernel.len();
    if signal.len() <= pad {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            required: pad + 1,
        });
    }
    let n = signal.len();
    let first = signal[0];
    let last = signal[n - 1];

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    let mut y = causal_filter(&ext, kernel.taps());
    y.reverse();
    let mut y = causal_filter(&y, kernel.taps());
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}

fn causal_filter(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let mut full = fft::convolve(x, taps);
    full.truncate(x.len());
    full
}

/// Filters every channel of a recording, in parallel.
pub fn filter_recording(rec: &Recording, kernel: &FilterKernel) -> Result<Recording> {
    let filtered: Vec<Vec<f64>> = rec
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(_, seq)| filter_zero_phase(seq, kernel))
        .collect::<Result<_>>()?;
    Ok(Recording::new(
        rec.subject_id(),
        rec.session(),
        rec.fs_hz(),
        rec.channels().to_vec(),
        filtered,
    )?
    .with_reference(rec.reference()))
}
