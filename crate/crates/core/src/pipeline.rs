//! Recording-to-features chain: bandpass, Welch spectrum, band powers, then
//! the fixed feature-table columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clinical::ResponseLabel;
use crate::error::Result;
use crate::features::{relative_power, session_features, BandPowers, FeatureOptions};
use crate::preprocess::{design_bandpass_fir, filter_recording, DEFAULT_ORDER};
use crate::signal::{ChannelId, Recording, TrialArm};
use crate::spectrum::{welch_recording, WelchParams};
use crate::table::{FeatureRow, FeatureTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSettings {
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            low_hz: 1.0,
            high_hz: 12.0,
            order: DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WelchSettings {
    pub window_len: usize,
    pub overlap: usize,
    /// Either `nfft` or `resolution_hz`; `nfft` wins when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nfft: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_hz: Option<f64>,
}

impl Default for WelchSettings {
    fn default() -> Self {
        Self {
            window_len: 256,
            overlap: 128,
            nfft: None,
            resolution_hz: Some(crate::spectrum::DEFAULT_RESOLUTION_HZ),
        }
    }
}

impl WelchSettings {
    pub fn params(&self, fs_hz: f64) -> WelchParams {
        let mut p = match (self.nfft, self.resolution_hz) {
            (Some(_), _) | (None, None) => WelchParams::for_sampling_rate(fs_hz),
            (None, Some(r)) => WelchParams::with_resolution(fs_hz, r),
        };
        p.window_len = self.window_len;
        p.overlap = self.overlap;
        if let Some(n) = self.nfft {
            p.nfft = n;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default)]
    pub filter: FilterSettings,
    #[serde(default)]
    pub welch: WelchSettings,
    #[serde(default)]
    pub options: FeatureOptions,
}

pub fn band_powers(rec: &Recording, cfg: &FeatureConfig) -> Result<BTreeMap<ChannelId, BandPowers>> {
    let kernel = design_bandpass_fir(cfg.filter.low_hz, cfg.filter.high_hz, rec.fs_hz(), cfg.filter.order)?;
    let filtered = filter_recording(rec, &kernel)?;
    let params = cfg.welch.params(rec.fs_hz());
    welch_recording(&filtered, &params)?
        .iter()
        .map(|psd| Ok((psd.channel.clone(), relative_power(psd)?)))
        .collect()
}

/// All feature-table columns for one recording, in table order.
pub fn recording_features(rec: &Recording, cfg: &FeatureConfig) -> Result<Vec<(String, f64)>> {
    session_features(&band_powers(rec, cfg)?, &cfg.options)
}

pub fn feature_row(rec: &Recording, group: TrialArm, label: ResponseLabel, cfg: &FeatureConfig) -> Result<(Vec<String>, FeatureRow)> {
    let (names, values): (Vec<String>, Vec<f64>) = recording_features(rec, cfg)?.into_iter().unzip();
    Ok((
        names,
        FeatureRow {
            subject_id: rec.subject_id().to_string(),
            session: rec.session(),
            group,
            label,
            values,
        },
    ))
}

/// Feature table for an in-memory synthetic cohort, rows sorted by subject then session.
pub fn synthetic_table(cohort: &[crate::synth::SyntheticSubject], cfg: &FeatureConfig) -> Result<FeatureTable> {
    use rayon::prelude::*;
    let rows = cohort
        .par_iter()
        .flat_map_iter(|s| [(&s.baseline, s), (&s.post, s)])
        .map(|(rec, s)| feature_row(rec, s.record.group, s.record.label, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut table = FeatureTable::new(rows.first().map(|r| r.0.clone()).unwrap_or_default());
    for (_, row) in rows {
        table.push(row)?;
    }
    table.sort();
    Ok(table)
}
