//! Seeded synthetic EEG and cohorts with known ground truth.
//!
//! Each channel is 1/f^k noise plus one oscillation per band. Cohorts attach
//! HDRS series whose labels are fixed in advance, and inject the responder
//! effects (weaker theta, stronger low alpha after treatment) into the EEG.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::clinical::{cohort_csv_string, label_responder, HdrsSeries, ResponseLabel, SubjectRecord, Timepoint, DEFAULT_THRESHOLD, HDRS_MAX};
use crate::error::{Error, Result};
use crate::features::FrequencyBand;
use crate::ml::derive_seed;
use crate::signal::{save_recording, save_sidecar, ChannelId, Manifest, ManifestEntry, Recording, Session, Sidecar, TrialArm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationMode {
    /// One sinusoid per band at the band centre, random phase.
    #[default]
    Sinusoid,
    /// Gaussian noise confined to the band edges, same mean power as the sinusoid.
    NarrowbandNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub fs_hz: f64,
    pub duration_s: f64,
    pub noise_exponent: f64,
    /// RMS of the colored background, in microvolts.
    pub noise_rms: f64,
    /// Oscillation amplitude per band, in microvolts.
    pub band_amps: BTreeMap<FrequencyBand, f64>,
    /// Right/left ratio applied to low-alpha amplitude on Fp2 and AF8.
    pub asymmetry_bias: f64,
    #[serde(default)]
    pub oscillation: OscillationMode,
    /// Sample rounding step in microvolts; 0 keeps full precision.
    #[serde(default)]
    pub quantum_uv: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            fs_hz: 512.0,
            duration_s: 600.0,
            noise_exponent: 1.0,
            noise_rms: 5.0,
            band_amps: [
                (FrequencyBand::Delta, 6.0),
                (FrequencyBand::Theta, 6.0),
                (FrequencyBand::LowAlpha, 10.0),
                (FrequencyBand::HighAlpha, 5.0),
            ]
            .into_iter()
            .collect(),
            asymmetry_bias: 1.0,
            oscillation: OscillationMode::Sinusoid,
            quantum_uv: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthSpec(m));
        if !(self.fs_hz.is_finite() && self.fs_hz > 0.0) {
            return bad(format!("fs_hz {}", self.fs_hz));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s {}", self.duration_s));
        }
        if self.samples() < 2 {
            return bad("fewer than two samples".into());
        }
        if !self.noise_exponent.is_finite() || !(self.noise_rms.is_finite() && self.noise_rms >= 0.0) {
            return bad("noise parameters must be finite, rms >= 0".into());
        }
        for (band, a) in &self.band_amps {
            if !(a.is_finite() && *a >= 0.0) {
                return bad(format!("{band:?} amplitude {a}"));
            }
            if band.centre_hz() >= self.fs_hz / 2.0 {
                return bad(format!("{band:?} above Nyquist"));
            }
        }
        if !(self.asymmetry_bias.is_finite() && self.asymmetry_bias >= 0.0) {
            return bad(format!("asymmetry_bias {}", self.asymmetry_bias));
        }
        if !(self.quantum_uv.is_finite() && self.quantum_uv >= 0.0) {
            return bad(format!("quantum_uv {}", self.quantum_uv));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.fs_hz * self.duration_s).round() as usize
    }

    fn amp(&self, band: FrequencyBand) -> f64 {
        self.band_amps.get(&band).copied().unwrap_or(0.0)
    }
}

fn is_right(ch: &ChannelId) -> bool {
    matches!(ch, ChannelId::Fp2 | ChannelId::AF8)
}

/// Real signal whose spectrum is white noise times `gain(freq_hz)`, scaled to `rms`.
fn shaped_noise(n: usize, fs: f64, rms: f64, rng: &mut ChaCha8Rng, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    if rms == 0.0 {
        return vec![0.0; n];
    }
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(StandardNormal.sample(rng), 0.0))
        .collect();
    crate::fft::forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        // mirror index so the inverse stays real
        let m = k.min(n - k);
        *c *= gain(m as f64 * fs / n as f64);
    }
    crate::fft::inverse(n).process(&mut buf);
    let out: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let actual = (out.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if actual == 0.0 {
        return out;
    }
    out.iter().map(|v| v * rms / actual).collect()
}

fn channel_signal(spec: &SynthSpec, ch: &ChannelId, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = spec.samples();
    let fs = spec.fs_hz;
    let k = spec.noise_exponent;
    let mut x = shaped_noise(n, fs, spec.noise_rms, rng, |f| if f == 0.0 { 0.0 } else { f.powf(-k / 2.0) });
    for band in FrequencyBand::ALL {
        let mut a = spec.amp(band);
        if band == FrequencyBand::LowAlpha && is_right(ch) {
            a *= spec.asymmetry_bias;
        }
        match spec.oscillation {
            OscillationMode::Sinusoid => {
                let phase = rng.random::<f64>() * 2.0 * PI;
                let w = 2.0 * PI * band.centre_hz() / fs;
                for (i, v) in x.iter_mut().enumerate() {
                    *v += a * (w * i as f64 + phase).sin();
                }
            }
            OscillationMode::NarrowbandNoise => {
                let (lo, hi) = band.edges();
                let nb = shaped_noise(n, fs, a / 2f64.sqrt(), rng, |f| if f >= lo && f <= hi { 1.0 } else { 0.0 });
                x.iter_mut().zip(nb).for_each(|(v, b)| *v += b);
            }
        }
    }
    if spec.quantum_uv > 0.0 {
        let q = spec.quantum_uv;
        x.iter_mut().for_each(|v| *v = (*v / q).round() * q);
    }
    x
}

fn gen_labeled(spec: &SynthSpec, subject_id: &str, session: Session) -> Result<Recording> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let channels = ChannelId::FOREHEAD.to_vec();
    let samples = channels.iter().map(|c| channel_signal(spec, c, &mut rng)).collect();
    Recording::new(subject_id, session, spec.fs_hz, channels, samples)
}

/// Four forehead channels, deterministic in `spec`.
pub fn gen_eeg(spec: &SynthSpec) -> Result<Recording> {
    gen_labeled(spec, "synthetic", Session::Baseline)
}

/// HDRS generator. Reductions are drawn from normals truncated to the
/// label's side of the threshold, so every subject keeps its assigned label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HdrsModel {
    pub baseline_mean: f64,
    pub baseline_sd: f64,
    /// Lowest admissible baseline score.
    pub baseline_min: f64,
    pub responder_reduction_mean: f64,
    pub responder_reduction_sd: f64,
    pub non_responder_reduction_mean: f64,
    pub non_responder_reduction_sd: f64,
    pub threshold: f64,
}

impl Default for HdrsModel {
    fn default() -> Self {
        Self {
            baseline_mean: 23.0,
            baseline_sd: 3.5,
            baseline_min: 14.0,
            responder_reduction_mean: 0.6,
            responder_reduction_sd: 0.12,
            non_responder_reduction_mean: 0.15,
            non_responder_reduction_sd: 0.15,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Share of the 240-minute change reached at each other timepoint.
const TRAJECTORY: [(Timepoint, f64); 10] = [
    (Timepoint::Min40, 0.5),
    (Timepoint::Min80, 0.8),
    (Timepoint::Min120, 0.9),
    (Timepoint::Day2, 0.9),
    (Timepoint::Day3, 0.8),
    (Timepoint::Day4, 0.7),
    (Timepoint::Day5, 0.6),
    (Timepoint::Day6, 0.5),
    (Timepoint::Day7, 0.45),
    (Timepoint::Day14, 0.3),
];

const MAX_DRAWS: usize = 10_000;

impl HdrsModel {
    fn validate(&self) -> Result<()> {
        let finite = [
            self.baseline_mean,
            self.baseline_sd,
            self.baseline_min,
            self.responder_reduction_mean,
            self.responder_reduction_sd,
            self.non_responder_reduction_mean,
            self.non_responder_reduction_sd,
            self.threshold,
        ];
        if finite.iter().any(|v| !v.is_finite())
            || self.baseline_sd < 0.0
            || self.responder_reduction_sd < 0.0
            || self.non_responder_reduction_sd < 0.0
        {
            return Err(Error::InfeasibleHdrsModel("parameters must be finite with SD >= 0".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InfeasibleHdrsModel(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        if !(1.0..=HDRS_MAX).contains(&self.baseline_min) {
            return Err(Error::InfeasibleHdrsModel(format!("baseline_min {} outside [1, 52]", self.baseline_min)));
        }
        Ok(())
    }

    fn draw_baseline(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let dist = Normal::new(self.baseline_mean, self.baseline_sd).expect("validated sd");
        for _ in 0..MAX_DRAWS {
            let b = dist.sample(rng).round();
            if b >= self.baseline_min && b <= HDRS_MAX {
                return Ok(b);
            }
        }
        Err(Error::InfeasibleHdrsModel(format!(
            "baseline N({}, {}) rarely lands in [{}, 52]",
            self.baseline_mean, self.baseline_sd, self.baseline_min
        )))
    }

    /// Integer 240-minute score on the requested side of the threshold.
    fn draw_followup(&self, baseline: f64, responder: bool, rng: &mut ChaCha8Rng) -> Result<f64> {
        let (mean, sd) = if responder {
            (self.responder_reduction_mean, self.responder_reduction_sd)
        } else {
            (self.non_responder_reduction_mean, self.non_responder_reduction_sd)
        };
        let dist = Normal::new(mean, sd).expect("validated sd");
        // worsening is capped at the scale maximum
        let floor = 1.0 - HDRS_MAX / baseline;
        for _ in 0..MAX_DRAWS {
            let r = dist.sample(rng);
            let ok = if responder { r >= self.threshold && r <= 1.0 } else { r < self.threshold && r >= floor };
            if !ok {
                continue;
            }
            let raw = baseline * (1.0 - r);
            let score = if responder { raw.floor() } else { raw.ceil() };
            let series = HdrsSeries::new([(Timepoint::Min0, baseline), (Timepoint::Min240, score)])?;
            let label = label_responder(&series, self.threshold, Timepoint::Min240)?;
            if (label == ResponseLabel::Responder) == responder {
                return Ok(score);
            }
        }
        Err(Error::InfeasibleHdrsModel(format!(
            "reduction N({mean}, {sd}) cannot produce a {} at baseline {baseline}",
            if responder { "responder" } else { "non-responder" }
        )))
    }

    fn draw_series(&self, responder: bool, rng: &mut ChaCha8Rng) -> Result<HdrsSeries> {
        let b = self.draw_baseline(rng)?;
        let s = self.draw_followup(b, responder, rng)?;
        let mut scores = vec![(Timepoint::Min0, b), (Timepoint::Min240, s)];
        for (t, w) in TRAJECTORY {
            scores.push((t, (b - w * (b - s)).round().clamp(0.0, HDRS_MAX)));
        }
        HdrsSeries::new(scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_per_group: BTreeMap<TrialArm, usize>,
    /// Fraction of responders per arm; the count is `round(fraction * n)`.
    pub responder_fraction: BTreeMap<TrialArm, f64>,
    /// Multiplier on responders' theta amplitude (both sessions).
    pub theta_deficit: f64,
    /// Multiplier on responders' low-alpha amplitude at the post session.
    pub post_alpha_gain: f64,
    pub hdrs_model: HdrsModel,
    /// Per-recording signal settings; its `seed` is ignored.
    pub template: SynthSpec,
    /// Log-SD of per-subject band amplitude factors, shared by both sessions.
    pub subject_variability: f64,
    /// Log-SD of per-session band amplitude factors.
    pub session_variability: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    /// Three arms of 18/19/18 with 11, 5 and 2 responders; no EEG effects.
    fn default() -> Self {
        Self {
            n_per_group: [(TrialArm::AKet05, 18), (TrialArm::BKet02, 19), (TrialArm::CSaline, 18)]
                .into_iter()
                .collect(),
            responder_fraction: [
                (TrialArm::AKet05, 11.0 / 18.0),
                (TrialArm::BKet02, 5.0 / 19.0),
                (TrialArm::CSaline, 2.0 / 18.0),
            ]
            .into_iter()
            .collect(),
            theta_deficit: 1.0,
            post_alpha_gain: 1.0,
            hdrs_model: HdrsModel::default(),
            template: SynthSpec {
                quantum_uv: 0.001,
                ..SynthSpec::default()
            },
            subject_variability: 0.2,
            session_variability: 0.05,
            seed: 0,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_group.values().sum::<usize>() == 0 {
            return Err(Error::EmptyCohort);
        }
        for (arm, f) in &self.responder_fraction {
            if !(0.0..=1.0).contains(f) {
                return Err(Error::InvalidSynthSpec(format!("responder fraction {f} for arm {arm}")));
            }
        }
        for (name, v) in [("theta_deficit", self.theta_deficit), ("post_alpha_gain", self.post_alpha_gain)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSynthSpec(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("subject_variability", self.subject_variability),
            ("session_variability", self.session_variability),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSynthSpec(format!("{name} must be >= 0, got {v}")));
            }
        }
        self.template.validate()?;
        self.hdrs_model.validate()
    }

    pub fn total(&self) -> usize {
        self.n_per_group.values().sum()
    }
}

/// Everything about one synthetic subject except the signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectPlan {
    pub record: SubjectRecord,
    pub responder: bool,
    pub seed: u64,
}

fn arm_index(arm: TrialArm) -> u64 {
    TrialArm::ALL.iter().position(|a| *a == arm).expect("known arm") as u64
}

/// Subject ids, responder assignment and HDRS series. Subjects are ordered
/// by arm then index; ids look like `A001`.
pub fn plan_cohort(spec: &CohortSpec) -> Result<Vec<SubjectPlan>> {
    spec.validate()?;
    let mut plans = Vec::with_capacity(spec.total());
    for (&arm, &n) in &spec.n_per_group {
        let frac = spec.responder_fraction.get(&arm).copied().unwrap_or(0.0);
        let n_resp = (frac * n as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[arm_index(arm), u64::MAX]));
        let mut flags: Vec<bool> = (0..n).map(|i| i < n_resp).collect();
        flags.shuffle(&mut rng);
        for (i, responder) in flags.into_iter().enumerate() {
            let id = format!("{}{:03}", arm.code(), i + 1);
            let hdrs = spec.hdrs_model.draw_series(responder, &mut rng)?;
            let record = SubjectRecord::labeled(id, arm, hdrs, spec.hdrs_model.threshold, Timepoint::Min240)?;
            debug_assert_eq!(record.label == ResponseLabel::Responder, responder);
            plans.push(SubjectPlan {
                record,
                responder,
                seed: derive_seed(spec.seed, &[arm_index(arm), i as u64]),
            });
        }
    }
    Ok(plans)
}

fn band_factors(rng: &mut ChaCha8Rng, log_sd: f64) -> BTreeMap<FrequencyBand, f64> {
    let d = Normal::new(0.0, log_sd).expect("validated sd");
    FrequencyBand::ALL.iter().map(|&b| (b, d.sample(rng).exp())).collect()
}

/// Baseline and post recordings for one planned subject.
pub fn gen_subject(spec: &CohortSpec, plan: &SubjectPlan) -> Result<(Recording, Recording)> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let subject = band_factors(&mut rng, spec.subject_variability);
    let mut out = Vec::with_capacity(2);
    for (si, session) in Session::ALL.into_iter().enumerate() {
        let session_f = band_factors(&mut rng, spec.session_variability);
        let mut s = spec.template.clone();
        s.seed = derive_seed(plan.seed, &[si as u64]);
        for band in FrequencyBand::ALL {
            let mut a = s.amp(band) * subject[&band] * session_f[&band];
            if plan.responder {
                if band == FrequencyBand::Theta {
                    a *= spec.theta_deficit;
                }
                if band == FrequencyBand::LowAlpha && session == Session::Post240 {
                    a *= spec.post_alpha_gain;
                }
            }
            s.band_amps.insert(band, a);
        }
        out.push(gen_labeled(&s, &plan.record.subject_id, session)?);
    }
    let post = out.pop().expect("two sessions");
    let base = out.pop().expect("two sessions");
    Ok((base, post))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSubject {
    pub record: SubjectRecord,
    pub baseline: Recording,
    pub post: Recording,
}

/// Whole cohort in memory. For long recordings prefer [`write_cohort`].
pub fn gen_cohort(spec: &CohortSpec) -> Result<Vec<SyntheticSubject>> {
    plan_cohort(spec)?
        .into_par_iter()
        .map(|plan| {
            let (baseline, post) = gen_subject(spec, &plan)?;
            Ok(SyntheticSubject {
                record: plan.record,
                baseline,
                post,
            })
        })
        .collect()
}

/// Writes `data/<id>_<session>.csv` + `.json`, `cohort.csv` and `manifest.json`
/// under `dir`. Subjects are generated and written one at a time per worker.
pub fn write_cohort(spec: &CohortSpec, dir: &Path) -> Result<Manifest> {
    let plans = plan_cohort(spec)?;
    let data = dir.join("data");
    std::fs::create_dir_all(&data).map_err(|e| Error::io(&data, e))?;
    let entries = plans
        .par_iter()
        .map(|plan| {
            let (base, post) = gen_subject(spec, plan)?;
            let mut entries = Vec::with_capacity(2);
            for rec in [base, post] {
                let stem = format!("{}_{}", rec.subject_id(), rec.session());
                let csv = PathBuf::from("data").join(format!("{stem}.csv"));
                let json = PathBuf::from("data").join(format!("{stem}.json"));
                save_recording(&rec, dir.join(&csv))?;
                save_sidecar(
                    &Sidecar {
                        subject_id: rec.subject_id().to_string(),
                        session: rec.session(),
                        fs_hz: Some(rec.fs_hz()),
                        reference: rec.reference().to_string(),
                        group: plan.record.group,
                        channels: Some(rec.channels().to_vec()),
                        recorded_at: None,
                        notes: String::new(),
                    },
                    dir.join(&json),
                )?;
                entries.push(ManifestEntry {
                    recording_csv: csv,
                    sidecar_json: json,
                });
            }
            Ok(entries)
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<SubjectRecord> = plans.into_iter().map(|p| p.record).collect();
    let cohort = dir.join("cohort.csv");
    std::fs::write(&cohort, cohort_csv_string(&records)).map_err(|e| Error::io(&cohort, e))?;
    let manifest = Manifest {
        recordings: entries.into_iter().flatten().collect(),
        cohort_csv: PathBuf::from("cohort.csv"),
    };
    manifest.save(dir.join("manifest.json"))?;
    Ok(manifest)
}
