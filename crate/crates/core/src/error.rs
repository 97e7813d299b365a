use std::path::PathBuf;

use thiserror::Error;

use crate::signal::ChannelId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    MalformedCsv(String),
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite sample at row {row}, channel {channel}")]
    NonFiniteSample { row: usize, channel: String },
    #[error("malformed sidecar: {0}")]
    MalformedSidecar(String),
    #[error("invalid sampling rate {0} Hz")]
    InvalidSamplingRate(f64),
    #[error("channel count mismatch: CSV has {csv}, sidecar declares {sidecar}")]
    ChannelCountMismatch { csv: usize, sidecar: usize },
    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("invalid band: {low_hz} Hz .. {high_hz} Hz at fs {fs_hz} Hz")]
    InvalidBand { low_hz: f64, high_hz: f64, fs_hz: f64 },
    #[error("filter order must be even and >= 4, got {0}")]
    OddOrder(usize),
    #[error("signal of {len} samples is shorter than required {required}")]
    SignalTooShort { len: usize, required: usize },

    #[error("invalid Welch parameters: {0}")]
    InvalidWelchParams(String),
    #[error("spectrum is already in decibels")]
    AlreadyDecibel,
    #[error("band {band} outside spectrum range {lo_hz}..{hi_hz} Hz")]
    BandOutOfRange { band: String, lo_hz: f64, hi_hz: f64 },
    #[error("total 1-12 Hz power is zero")]
    ZeroTotalPower,
    #[error("degenerate asymmetry: left + right power is zero")]
    DegenerateAsymmetry,
    #[error("maximum band power is zero")]
    ZeroMaxPower,
    #[error("missing channel {0}")]
    MissingChannel(ChannelId),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("missing HDRS timepoint {0}")]
    MissingTimepoint(String),
    #[error("baseline HDRS score is zero")]
    ZeroBaseline,
    #[error("HDRS score {0} outside [0, 52]")]
    ScoreOutOfRange(f64),
    #[error("empty cohort")]
    EmptyCohort,
    #[error("malformed cohort CSV: {0}")]
    MalformedCohort(String),

    #[error("empty sample")]
    EmptySample,
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),
    #[error("invalid significance level {0}")]
    InvalidAlpha(f64),
    #[error("non-finite observation")]
    NonFiniteObservation,
    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset contains a single class")]
    SingleClass,
    #[error("degenerate geometry: all training rows identical")]
    DegenerateGeometry,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class too small to stratify: {class} has {count} rows, need {required}")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },
    #[error("cross-validation needs at least two subjects")]
    SingleSubject,
    #[error("all-zero confusion matrix")]
    EmptyConfusion,

    #[error("invalid synthesis spec: {0}")]
    InvalidSynthSpec(String),
    #[error("infeasible HDRS model: {0}")]
    InfeasibleHdrsModel(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
