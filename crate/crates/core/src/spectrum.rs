//! Welch power spectral density.
//!
//! Each segment is mean-detrended, windowed, zero-padded to `nfft` and
//! transformed. Power is reported per bin as `|X_k|^2 / (nfft * sum(w^2))`,
//! averaged over segments and folded to one side (interior bins doubled,
//! DC and Nyquist left alone). With this normalisation the bins sum to the
//! mean square of the signal regardless of `nfft`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelId, Recording};

pub const DEFAULT_RESOLUTION_HZ: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFn {
    Hamming,
    Hann,
    Rectangular,
}

impl WindowFn {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let denom = (len.max(2) - 1) as f64;
        (0..len)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / denom;
                match self {
                    WindowFn::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowFn::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowFn::Rectangular => 1.0,
                }
            })
            .collect()
    }

    fn name(self) -> &'static str {
        match self {
            WindowFn::Hamming => "hamming",
            WindowFn::Hann => "hann",
            WindowFn::Rectangular => "rectangular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchParams {
    pub window_len: usize,
    pub overlap: usize,
    pub nfft: usize,
    pub window_fn: WindowFn,
}

impl WelchParams {
    /// 256-sample Hamming window, 128 overlap, and `nfft` chosen for 0.5 Hz bins.
    pub fn for_sampling_rate(fs_hz: f64) -> Self {
        Self::with_resolution(fs_hz, DEFAULT_RESOLUTION_HZ)
    }

    pub fn with_resolution(fs_hz: f64, resolution_hz: f64) -> Self {
        let nfft = (fs_hz / resolution_hz).round().max(256.0) as usize;
        Self {
            window_len: 256,
            overlap: 128,
            nfft,
            window_fn: WindowFn::Hamming,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.overlap >= self.window_len {
            return Err(Error::InvalidWelchParams(format!(
                "need 0 <= overlap ({}) < window_len ({})",
                self.overlap, self.window_len
            )));
        }
        if self.nfft < self.window_len {
            return Err(Error::InvalidWelchParams(format!(
                "nfft ({}) < window_len ({})",
                self.nfft, self.window_len
            )));
        }
        Ok(())
    }

    pub fn segment_count(&self, n: usize) -> usize {
        if n < self.window_len {
            0
        } else {
            (n - self.window_len) / (self.window_len - self.overlap) + 1
        }
    }
}

impl Default for WelchParams {
    fn default() -> Self {
        Self::for_sampling_rate(512.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Decibel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub channel: ChannelId,
    pub freqs_hz: Vec<f64>,
    pub power: Vec<f64>,
    pub scale: Scale,
    pub params: WelchParams,
    pub fs_hz: f64,
    pub segments: usize,
}

impl PowerSpectrum {
    pub fn bin_spacing(&self) -> f64 {
        self.fs_hz / self.params.nfft as f64
    }

    /// Rebuilds a spectrum from explicit bins, e.g. for tests or imported data.
    pub fn from_bins(channel: ChannelId, fs_hz: f64, params: WelchParams, power: Vec<f64>) -> Self {
        let df = fs_hz / params.nfft as f64;
        let freqs_hz = (0..power.len()).map(|k| k as f64 * df).collect();
        Self {
            channel,
            freqs_hz,
            power,
            scale: Scale::Linear,
            params,
            fs_hz,
            segments: 0,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# channel={} fs_hz={} window_len={} overlap={} nfft={} window={} segments={} scale={} normalization=power_per_bin",
            self.channel,
            self.fs_hz,
            self.params.window_len,
            self.params.overlap,
            self.params.nfft,
            self.params.window_fn.name(),
            self.segments,
            match self.scale {
                Scale::Linear => "linear",
                Scale::Decibel => "db",
            }
        );
        out.push_str("freq_hz,power\n");
        for (f, p) in self.freqs_hz.iter().zip(&self.power) {
            let _ = writeln!(out, "{f},{p}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

pub fn welch_psd(signal: &[f64], fs_hz: f64, channel: ChannelId, params: &WelchParams) -> Result<PowerSpectrum> {
    params.validate()?;
    if !(fs_hz.is_finite() && fs_hz > 0.0) {
        return Err(Error::InvalidSamplingRate(fs_hz));
    }
    if signal.len() < params.window_len {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            required: params.window_len,
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObservation);
    }

    let window = params.window_fn.coefficients(params.window_len);
    let energy: f64 = window.iter().map(|w| w * w).sum();
    let step = params.window_len - params.overlap;
    let segments = params.segment_count(signal.len());
    let nfft = params.nfft;
    let n_bins = nfft / 2 + 1;

    let fft = crate::fft::forward(nfft);
    let mut buf = vec![Complex64::default(); nfft];
    let mut acc = vec![0.0; n_bins];
    for s in 0..segments {
        let seg = &signal[s * step..s * step + params.window_len];
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        for (slot, (&x, &w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *slot = Complex64::new((x - mean) * w, 0.0);
        }
        buf[params.window_len..].fill(Complex64::default());
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }

    let norm = 1.0 / (segments as f64 * nfft as f64 * energy);
    let has_nyquist = nfft % 2 == 0;
    let power: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let edge = k == 0 || (has_nyquist && k == n_bins - 1);
            a * norm * if edge { 1.0 } else { 2.0 }
        })
        .collect();
    let df = fs_hz / nfft as f64;

    Ok(PowerSpectrum {
        channel,
        freqs_hz: (0..n_bins).map(|k| k as f64 * df).collect(),
        power,
        scale: Scale::Linear,
        params: *params,
        fs_hz,
        segments,
    })
}

/// Welch PSD of every channel, computed in parallel, in channel order.
pub fn welch_recording(rec: &Recording, params: &WelchParams) -> Result<Vec<PowerSpectrum>> {
    rec.iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(ch, seq)| welch_psd(seq, rec.fs_hz(), (*ch).clone(), params))
        .collect()
}

pub const DEFAULT_DB_FLOOR: f64 = 1e-12;

pub fn to_db(psd: &PowerSpectrum, floor: f64) -> Result<PowerSpectrum> {
    if psd.scale == Scale::Decibel {
        return Err(Error::AlreadyDecibel);
    }
    let mut out = psd.clone();
    out.power = psd.power.iter().map(|&v| power_to_db(v, floor)).collect();
    out.scale = Scale::Decibel;
    Ok(out)
}

pub(crate) fn power_to_db(v: f64, floor: f64) -> f64 {
    10.0 * v.max(floor).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn mean_square(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn sinusoid_peak_and_parseval() {
        let fs = 512.0;
        let x: Vec<f64> = (0..60 * 512).map(|i| (2.0 * PI * 8.0 * i as f64 / fs).sin()).collect();
        let p = welch_psd(&x, fs, ChannelId::Fp1, &WelchParams::for_sampling_rate(fs)).unwrap();
        assert_eq!(p.params.nfft, 1024);
        assert_eq!(p.bin_spacing(), 0.5);
        let (kmax, _) = p.power.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
        assert_eq!(p.freqs_hz[kmax], 8.0);
        let total: f64 = p.power.iter().sum();
        assert!((total - 0.5).abs() <= 0.05 * 0.5, "{total}");
        assert_eq!(p.segments, (x.len() - 256) / 128 + 1);
        assert_eq!(p.freqs_hz.len(), p.power.len());
    }

    #[test]
    fn zeros_give_zero_spectrum() {
        let p = welch_psd(&vec![0.0; 2048], 512.0, ChannelId::Fp1, &WelchParams::default()).unwrap();
        assert!(p.power.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_noise_parseval_over_trials() {
        let sigma = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, sigma).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..256 * 40).map(|_| noise.sample(&mut rng)).collect();
            let p = welch_psd(&x, 512.0, ChannelId::Fp1, &WelchParams::default()).unwrap();
            let total: f64 = p.power.iter().sum();
            assert!((total - sigma * sigma).abs() <= 0.1 * sigma * sigma, "{total}");
        }
    }

    #[test]
    fn zero_padding_preserves_total_power() {
        let fs = 512.0;
        let x: Vec<f64> = (0..30 * 512)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * PI * 5.3 * t).sin() + 0.4 * (2.0 * PI * 9.7 * t).cos()
            })
            .collect();
        let mut params = WelchParams::default();
        let a: f64 = welch_psd(&x, fs, ChannelId::Fp1, &params).unwrap().power.iter().sum();
        params.nfft = 512;
        let b: f64 = welch_psd(&x, fs, ChannelId::Fp1, &params).unwrap().power.iter().sum();
        assert!((a - b).abs() <= 0.02 * a);
    }

    #[test]
    fn parameter_errors() {
        let mut p = WelchParams::default();
        assert!(matches!(
            welch_psd(&[0.0; 100], 512.0, ChannelId::Fp1, &p),
            Err(Error::SignalTooShort { .. })
        ));
        p.nfft = 128;
        assert!(matches!(
            welch_psd(&[0.0; 1000], 512.0, ChannelId::Fp1, &p),
            Err(Error::InvalidWelchParams(_))
        ));
        p.nfft = 1024;
        p.overlap = 256;
        assert!(matches!(p.validate(), Err(Error::InvalidWelchParams(_))));
    }

    #[test]
    fn decibel_conversion() {
        let params = WelchParams::default();
        let p = PowerSpectrum::from_bins(ChannelId::Fp1, 512.0, params, vec![1.0, 100.0, 0.0]);
        let db = to_db(&p, DEFAULT_DB_FLOOR).unwrap();
        assert_eq!(db.power, vec![0.0, 20.0, -120.0]);
        assert_eq!(db.scale, Scale::Decibel);
        assert!(matches!(to_db(&db, DEFAULT_DB_FLOOR), Err(Error::AlreadyDecibel)));
    }

    #[test]
    fn csv_export_has_parameter_header() {
        let p = PowerSpectrum::from_bins(ChannelId::AF7, 512.0, WelchParams::default(), vec![1.0, 2.0]);
        let text = p.to_csv_string();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# channel=AF7 fs_hz=512 window_len=256 overlap=128 nfft=1024"));
        assert_eq!(lines.next(), Some("freq_hz,power"));
        assert_eq!(lines.next(), Some("0,1"));
        assert_eq!(lines.next(), Some("0.5,2"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scaling_equivariance(seed in 0u64..10_000, a in 0.01f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 1.0).unwrap();
            let x: Vec<f64> = (0..1024).map(|_| noise.sample(&mut rng)).collect();
            let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
            let p = welch_psd(&x, 512.0, ChannelId::Fp1, &WelchParams::default()).unwrap();
            let q = welch_psd(&ax, 512.0, ChannelId::Fp1, &WelchParams::default()).unwrap();
            for (u, v) in p.power.iter().zip(&q.power) {
                prop_assert!((v - a * a * u).abs() <= 1e-9 * (a * a * u).abs().max(1e-300));
            }
        }

        #[test]
        fn parseval_for_long_noise(seed in 0u64..10_000, sigma in 0.1f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, sigma).unwrap();
            let x: Vec<f64> = (0..256 * 32).map(|_| noise.sample(&mut rng)).collect();
            let p = welch_psd(&x, 512.0, ChannelId::Fp1, &WelchParams::default()).unwrap();
            prop_assert!(p.segments >= 30);
            let total: f64 = p.power.iter().sum();
            let ms = mean_square(&x);
            prop_assert!((total - ms).abs() <= 0.1 * ms);
        }
    }
}
