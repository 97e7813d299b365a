//! Multi-channel EEG recordings: types, CSV/JSON ingestion and quality checks.
//!
//! The interchange format is a CSV with a `time_s` column followed by one
//! column per channel (amplitudes in microvolts), plus a JSON sidecar that
//! carries the sampling rate and session metadata.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Electrode label. The four forehead sites are first-class; anything else
/// is carried verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelId {
    Fp1,
    Fp2,
    AF7,
    AF8,
    Other(String),
}

impl ChannelId {
    /// Reporting order used throughout the tables: lateral-left to lateral-right.
    pub const FOREHEAD: [ChannelId; 4] = [ChannelId::AF7, ChannelId::Fp1, ChannelId::Fp2, ChannelId::AF8];

    pub fn as_str(&self) -> &str {
        match self {
            ChannelId::Fp1 => "Fp1",
            ChannelId::Fp2 => "Fp2",
            ChannelId::AF7 => "AF7",
            ChannelId::AF8 => "AF8",
            ChannelId::Other(s) => s,
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for ChannelId {
    fn from(s: &str) -> Self {
        match s {
            "Fp1" => ChannelId::Fp1,
            "Fp2" => ChannelId::Fp2,
            "AF7" => ChannelId::AF7,
            "AF8" => ChannelId::AF8,
            other => ChannelId::Other(other.to_string()),
        }
    }
}

impl Serialize for ChannelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ChannelId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(ChannelId::from(s.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Session {
    Baseline,
    Post240,
}

impl Session {
    pub const ALL: [Session; 2] = [Session::Baseline, Session::Post240];

    pub fn as_str(self) -> &'static str {
        match self {
            Session::Baseline => "baseline",
            Session::Post240 => "post240",
        }
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Session {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Session::Baseline),
            "post240" => Ok(Session::Post240),
            other => Err(Error::MalformedSidecar(format!("unknown session `{other}`"))),
        }
    }
}

/// Trial arm: 0.5 mg/kg ketamine, 0.2 mg/kg ketamine, or saline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrialArm {
    #[serde(rename = "A")]
    AKet05,
    #[serde(rename = "B")]
    BKet02,
    #[serde(rename = "C")]
    CSaline,
}

impl TrialArm {
    pub const ALL: [TrialArm; 3] = [TrialArm::AKet05, TrialArm::BKet02, TrialArm::CSaline];

    pub fn code(self) -> &'static str {
        match self {
            TrialArm::AKet05 => "A",
            TrialArm::BKet02 => "B",
            TrialArm::CSaline => "C",
        }
    }

    pub fn is_ketamine(self) -> bool {
        !matches!(self, TrialArm::CSaline)
    }
}

impl fmt::Display for TrialArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TrialArm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(TrialArm::AKet05),
            "B" => Ok(TrialArm::BKet02),
            "C" => Ok(TrialArm::CSaline),
            other => Err(Error::UnknownGroup(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub group: TrialArm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_at: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

/// JSON sidecar accompanying a recording CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub subject_id: String,
    pub session: Session,
    pub fs_hz: Option<f64>,
    #[serde(default = "default_reference")]
    pub reference: String,
    pub group: TrialArm,
    /// Optional channel list; when present it must agree with the CSV header.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_at: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

fn default_reference() -> String {
    "A2".to_string()
}

impl Sidecar {
    pub fn session_meta(&self) -> SessionMeta {
        SessionMeta {
            group: self.group,
            recorded_at: self.recorded_at.clone(),
            notes: self.notes.clone(),
        }
    }
}

/// An immutable multi-channel session. All channels share one length and
/// every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    subject_id: String,
    session: Session,
    fs_hz: f64,
    channels: Vec<ChannelId>,
    samples: Vec<Vec<f64>>,
    reference: String,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        session: Session,
        fs_hz: f64,
        channels: Vec<ChannelId>,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(fs_hz.is_finite() && fs_hz > 0.0) {
            return Err(Error::InvalidSamplingRate(fs_hz));
        }
        if channels.is_empty() || channels.len() != samples.len() {
            return Err(Error::InvalidRecording(format!(
                "{} channel labels for {} sample sequences",
                channels.len(),
                samples.len()
            )));
        }
        let len = samples[0].len();
        if len == 0 {
            return Err(Error::InvalidRecording("no samples".into()));
        }
        for (ch, seq) in channels.iter().zip(&samples) {
            if seq.len() != len {
                return Err(Error::InvalidRecording(format!(
                    "channel {ch} has {} samples, expected {len}",
                    seq.len()
                )));
            }
            if let Some(row) = seq.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample {
                    row,
                    channel: ch.to_string(),
                });
            }
        }
        Ok(Self {
            subject_id: subject_id.into(),
            session,
            fs_hz,
            channels,
            samples,
            reference: default_reference(),
        })
    }

    pub fn with_reference(mut self, reference: impl Into<String>) -> Self {
        self.reference = reference.into();
        self
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn session(&self) -> Session {
        self.session
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn channels(&self) -> &[ChannelId] {
        &self.channels
    }

    pub fn reference(&self) -> &str {
        &self.reference
    }

    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.fs_hz
    }

    pub fn channel(&self, id: &ChannelId) -> Option<&[f64]> {
        self.channels
            .iter()
            .position(|c| c == id)
            .map(|i| self.samples[i].as_slice())
    }

    /// Iterates `(channel, samples)` in stored order.
    pub fn iter(&self) -> impl Iterator<Item = (&ChannelId, &[f64])> {
        self.channels.iter().zip(self.samples.iter().map(Vec::as_slice))
    }
}

/// Reads a recording CSV together with its sidecar.
pub fn load_recording(path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<Recording> {
    let sidecar = load_sidecar(meta_path)?;
    let fs_hz = match sidecar.fs_hz {
        Some(fs) if fs.is_finite() && fs > 0.0 => fs,
        Some(fs) => return Err(Error::InvalidSamplingRate(fs)),
        None => return Err(Error::InvalidSamplingRate(f64::NAN)),
    };
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (channels, samples) = parse_recording_csv(&text)?;
    if let Some(declared) = &sidecar.channels {
        if declared.len() != channels.len() {
            return Err(Error::ChannelCountMismatch {
                csv: channels.len(),
                sidecar: declared.len(),
            });
        }
    }
    Ok(Recording::new(sidecar.subject_id, sidecar.session, fs_hz, channels, samples)?
        .with_reference(sidecar.reference))
}

pub fn load_sidecar(path: impl AsRef<Path>) -> Result<Sidecar> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedSidecar(e.to_string()))
}

fn parse_recording_csv(text: &str) -> Result<(Vec<ChannelId>, Vec<Vec<f64>>)> {
    let csv = crate::csvio::read(text)?;
    let fields = &csv.header;
    if fields.len() < 2 || fields[0] != "time_s" {
        return Err(Error::MalformedCsv(format!("bad header `{}`", fields.join(","))));
    }
    let channels: Vec<ChannelId> = fields[1..].iter().map(|s| ChannelId::from(s.as_str())).collect();
    for (i, ch) in channels.iter().enumerate() {
        if ch.as_str().is_empty() || channels[..i].contains(ch) {
            return Err(Error::MalformedCsv(format!("bad or duplicate channel `{ch}`")));
        }
    }

    let mut samples = vec![Vec::with_capacity(csv.rows.len()); channels.len()];
    for (row, record) in csv.rows.iter().enumerate() {
        for (c, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::MalformedCsv(format!("row {row}: cannot parse `{cell}`")))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    row,
                    channel: channels[c].to_string(),
                });
            }
            samples[c].push(v);
        }
    }
    if samples[0].is_empty() {
        return Err(Error::MalformedCsv("no data rows".into()));
    }
    Ok((channels, samples))
}

/// Writes the recording CSV. Amplitudes use the shortest round-trip decimal
/// representation, so reloading reproduces every sample bit for bit.
pub fn save_recording(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "time_s").map_err(io)?;
    for ch in &rec.channels {
        write!(w, ",{ch}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for i in 0..rec.len() {
        write!(w, "{}", i as f64 / rec.fs_hz).map_err(io)?;
        for seq in &rec.samples {
            write!(w, ",{}", seq[i]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn save_sidecar(sidecar: &Sidecar, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(sidecar)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    pub min_seconds: f64,
    pub max_abs_uv: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            min_seconds: 540.0,
            max_abs_uv: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Finding {
    TooShort { duration_s: f64, min_seconds: f64 },
    FlatChannel { channel: ChannelId },
    AmplitudeOutOfRange { channel: ChannelId, max_abs_uv: f64, samples: usize },
}

/// Quality findings for a recording. Never fails and never mutates.
pub fn validate_recording(rec: &Recording, cfg: &ValidationConfig) -> Vec<Finding> {
    let mut findings = Vec::new();
    let duration_s = rec.duration_seconds();
    if duration_s < cfg.min_seconds {
        findings.push(Finding::TooShort {
            duration_s,
            min_seconds: cfg.min_seconds,
        });
    }
    for (ch, seq) in rec.iter() {
        let first = seq[0];
        if seq.iter().all(|&v| v == first) {
            findings.push(Finding::FlatChannel { channel: ch.clone() });
        }
        let over: Vec<f64> = seq.iter().map(|v| v.abs()).filter(|&a| a > cfg.max_abs_uv).collect();
        if !over.is_empty() {
            findings.push(Finding::AmplitudeOutOfRange {
                channel: ch.clone(),
                max_abs_uv: over.iter().cloned().fold(0.0, f64::max),
                samples: over.len(),
            });
        }
    }
    findings
}

/// One recording and its sidecar, as listed in a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub recording_csv: PathBuf,
    pub sidecar_json: PathBuf,
}

/// Batch input: recordings plus the cohort CSV. Relative paths are relative
/// to the manifest file's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub recordings: Vec<ManifestEntry>,
    pub cohort_csv: PathBuf,
}

impl Manifest {
    /// Loads a manifest and resolves its paths against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Ok(m.resolved(base))
    }

    pub fn resolved(&self, base: &Path) -> Self {
        Manifest {
            recordings: self
                .recordings
                .iter()
                .map(|e| ManifestEntry {
                    recording_csv: base.join(&e.recording_csv),
                    sidecar_json: base.join(&e.sidecar_json),
                })
                .collect(),
            cohort_csv: base.join(&self.cohort_csv),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_channels() -> Vec<ChannelId> {
        vec![ChannelId::Fp1, ChannelId::Fp2, ChannelId::AF7, ChannelId::AF8]
    }

    fn write_pair(dir: &Path, csv: &str, sidecar: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let c = dir.join("rec.csv");
        let s = dir.join("rec.json");
        fs::write(&c, csv).unwrap();
        fs::write(&s, sidecar).unwrap();
        (c, s)
    }

    const SIDECAR: &str =
        r#"{"subject_id": "S01", "session": "baseline", "fs_hz": 4, "reference": "A2", "group": "A"}"#;

    #[test]
    fn duration_is_length_over_rate() {
        let n = 307_200;
        let rec = Recording::new("S", Session::Baseline, 512.0, four_channels(), vec![vec![0.0; n]; 4]).unwrap();
        assert_eq!(rec.duration_seconds(), 600.0);
    }

    #[test]
    fn nan_cell_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let csv = "time_s,Fp1,Fp2,AF7,AF8\n0,1,2,3,4\n0.25,1,NaN,3,4\n";
        let (c, s) = write_pair(dir.path(), csv, SIDECAR);
        match load_recording(c, s) {
            Err(Error::NonFiniteSample { row, channel }) => {
                assert_eq!(row, 1);
                assert_eq!(channel, "Fp2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rate_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let sidecar = SIDECAR.replace("\"fs_hz\": 4", "\"fs_hz\": 0");
        let (c, s) = write_pair(dir.path(), "time_s,Fp1\n0,1\n", &sidecar);
        assert!(matches!(load_recording(c, s), Err(Error::InvalidSamplingRate(_))));
    }

    #[test]
    fn missing_rate_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let sidecar = SIDECAR.replace("\"fs_hz\": 4, ", "");
        let (c, s) = write_pair(dir.path(), "time_s,Fp1\n0,1\n", &sidecar);
        assert!(matches!(load_recording(c, s), Err(Error::InvalidSamplingRate(_))));
    }

    #[test]
    fn ragged_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let (c, s) = write_pair(dir.path(), "time_s,Fp1,Fp2\n0,1,2\n0.25,1\n", SIDECAR);
        assert!(matches!(load_recording(&c, &s), Err(Error::RaggedRow { row: 1, .. })));
        let (c, s) = write_pair(dir.path(), "t,Fp1\n0,1\n", SIDECAR);
        assert!(matches!(load_recording(c, s), Err(Error::MalformedCsv(_))));
    }

    #[test]
    fn sidecar_channel_count_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let sidecar = SIDECAR.replace("\"group\": \"A\"", "\"group\": \"A\", \"channels\": [\"Fp1\"]");
        let (c, s) = write_pair(dir.path(), "time_s,Fp1,Fp2\n0,1,2\n", &sidecar);
        assert!(matches!(
            load_recording(c, s),
            Err(Error::ChannelCountMismatch { csv: 2, sidecar: 1 })
        ));
    }

    #[test]
    fn channel_order_follows_header() {
        let dir = tempfile::tempdir().unwrap();
        let (c, s) = write_pair(dir.path(), "time_s,AF8,Fp1,X9\n0,1,2,3\n0.25,4,5,6\n", SIDECAR);
        let rec = load_recording(c, s).unwrap();
        assert_eq!(rec.channels(), &[ChannelId::AF8, ChannelId::Fp1, ChannelId::Other("X9".into())]);
        assert_eq!(rec.channel(&ChannelId::Fp1).unwrap(), &[2.0, 5.0]);
        assert_eq!(rec.reference(), "A2");
        assert_eq!(rec.fs_hz(), 4.0);
    }

    #[test]
    fn validation_findings() {
        let fs = 8.0;
        let n = (600.0 * fs) as usize;
        let wave: Vec<f64> = (0..n).map(|i| (i as f64).sin() * 20.0).collect();
        let mut chans = vec![wave.clone(); 4];
        let rec = Recording::new("S", Session::Baseline, fs, four_channels(), chans.clone()).unwrap();
        assert!(validate_recording(&rec, &ValidationConfig::default()).is_empty());

        chans[0] = vec![0.0; n];
        let rec = Recording::new("S", Session::Baseline, fs, four_channels(), chans.clone()).unwrap();
        assert_eq!(
            validate_recording(&rec, &ValidationConfig::default()),
            vec![Finding::FlatChannel { channel: ChannelId::Fp1 }]
        );

        let short: Vec<Vec<f64>> = vec![wave[..(60.0 * fs) as usize].to_vec(); 4];
        let rec = Recording::new("S", Session::Baseline, fs, four_channels(), short).unwrap();
        let f = validate_recording(&rec, &ValidationConfig::default());
        assert!(matches!(f.as_slice(), [Finding::TooShort { .. }]));

        chans[0] = wave.iter().map(|v| v * 30.0).collect();
        let rec = Recording::new("S", Session::Baseline, fs, four_channels(), chans).unwrap();
        let f = validate_recording(&rec, &ValidationConfig::default());
        assert!(matches!(f.as_slice(), [Finding::AmplitudeOutOfRange { channel: ChannelId::Fp1, .. }]));
    }
}
