//! Forehead qEEG analysis: signal ingestion, zero-phase filtering, Welch
//! spectra, band features, responder labelling, nonparametric statistics,
//! response classifiers and a seeded synthetic data generator.

pub mod clinical;
pub mod error;
pub mod features;
mod csvio;
mod fft;
pub mod ml;
pub mod pipeline;
pub mod preprocess;
pub mod signal;
pub mod spectrum;
pub mod stats;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
