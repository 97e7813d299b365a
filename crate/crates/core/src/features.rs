//! Band powers, relative power, left-right alpha asymmetry and cordance.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelId, Session};
use crate::spectrum::{power_to_db, PowerSpectrum, Scale, DEFAULT_DB_FLOOR};

/// Bin-centre comparison slack for band edges.
const EDGE_EPS: f64 = 1e-9;

/// Range whose summed power is the relative-power denominator.
pub const TOTAL_RANGE_HZ: (f64, f64) = (1.0, 12.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyBand {
    Delta,
    Theta,
    LowAlpha,
    HighAlpha,
}

impl FrequencyBand {
    pub const ALL: [FrequencyBand; 4] = [
        FrequencyBand::Delta,
        FrequencyBand::Theta,
        FrequencyBand::LowAlpha,
        FrequencyBand::HighAlpha,
    ];

    pub fn lo_hz(self) -> f64 {
        self.edges().0
    }

    pub fn hi_hz(self) -> f64 {
        self.edges().1
    }

    pub fn edges(self) -> (f64, f64) {
        match self {
            FrequencyBand::Delta => (1.0, 3.5),
            FrequencyBand::Theta => (4.0, 7.5),
            FrequencyBand::LowAlpha => (8.0, 10.0),
            FrequencyBand::HighAlpha => (10.5, 12.0),
        }
    }

    pub fn centre_hz(self) -> f64 {
        let (lo, hi) = self.edges();
        0.5 * (lo + hi)
    }

    pub fn slug(self) -> &'static str {
        match self {
            FrequencyBand::Delta => "delta",
            FrequencyBand::Theta => "theta",
            FrequencyBand::LowAlpha => "lowalpha",
            FrequencyBand::HighAlpha => "highalpha",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FrequencyBand::Delta => "Delta",
            FrequencyBand::Theta => "Theta",
            FrequencyBand::LowAlpha => "Low Alpha",
            FrequencyBand::HighAlpha => "High Alpha",
        }
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for FrequencyBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FrequencyBand::ALL
            .into_iter()
            .find(|b| b.slug() == s)
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

fn sum_range(psd: &PowerSpectrum, lo: f64, hi: f64, label: &str) -> Result<f64> {
    if psd.scale != Scale::Linear {
        return Err(Error::AlreadyDecibel);
    }
    let first = psd.freqs_hz.first().copied().unwrap_or(f64::INFINITY);
    let last = psd.freqs_hz.last().copied().unwrap_or(f64::NEG_INFINITY);
    if first > lo + EDGE_EPS || last < hi - EDGE_EPS {
        return Err(Error::BandOutOfRange {
            band: label.to_string(),
            lo_hz: first,
            hi_hz: last,
        });
    }
    Ok(psd
        .freqs_hz
        .iter()
        .zip(&psd.power)
        .filter(|(&f, _)| f >= lo - EDGE_EPS && f <= hi + EDGE_EPS)
        .map(|(_, &p)| p)
        .sum())
}

/// Sum of linear PSD bins whose centre lies in `[lo, hi]`, both edges inclusive.
pub fn band_power(psd: &PowerSpectrum, band: FrequencyBand) -> Result<f64> {
    let (lo, hi) = band.edges();
    sum_range(psd, lo, hi, band.slug())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPowers {
    pub channel: ChannelId,
    pub absolute: BTreeMap<FrequencyBand, f64>,
    pub absolute_db: BTreeMap<FrequencyBand, f64>,
    pub relative: BTreeMap<FrequencyBand, f64>,
    pub total_power: f64,
}

impl BandPowers {
    pub fn absolute(&self, band: FrequencyBand) -> f64 {
        self.absolute[&band]
    }

    pub fn relative(&self, band: FrequencyBand) -> f64 {
        self.relative[&band]
    }

    pub fn absolute_db(&self, band: FrequencyBand) -> f64 {
        self.absolute_db[&band]
    }

    /// Band dB over total dB. Only a shape diagnostic for comparing against
    /// tables that label relative power in decibels; not relative power.
    pub fn log_ratio_diagnostic(&self, band: FrequencyBand) -> f64 {
        self.absolute_db(band) / power_to_db(self.total_power, DEFAULT_DB_FLOOR)
    }
}

/// Absolute and relative power per band; the denominator is all power in 1-12 Hz.
pub fn relative_power(psd: &PowerSpectrum) -> Result<BandPowers> {
    let total_power = sum_range(psd, TOTAL_RANGE_HZ.0, TOTAL_RANGE_HZ.1, "total")?;
    if total_power <= 0.0 {
        return Err(Error::ZeroTotalPower);
    }
    let mut absolute = BTreeMap::new();
    let mut absolute_db = BTreeMap::new();
    let mut relative = BTreeMap::new();
    for band in FrequencyBand::ALL {
        let p = band_power(psd, band)?;
        absolute.insert(band, p);
        absolute_db.insert(band, power_to_db(p, DEFAULT_DB_FLOOR));
        relative.insert(band, p / total_power);
    }
    Ok(BandPowers {
        channel: psd.channel.clone(),
        absolute,
        absolute_db,
        relative,
        total_power,
    })
}

/// Homologous left/right electrode pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelPair {
    pub left: ChannelId,
    pub right: ChannelId,
}

impl ChannelPair {
    pub const MID_PREFRONTAL: ChannelPair = ChannelPair {
        left: ChannelId::Fp1,
        right: ChannelId::Fp2,
    };
    pub const MID_LATERAL: ChannelPair = ChannelPair {
        left: ChannelId::AF7,
        right: ChannelId::AF8,
    };

    /// The two forehead pairs, lateral first as in the report tables.
    pub fn forehead() -> [ChannelPair; 2] {
        [ChannelPair::MID_LATERAL, ChannelPair::MID_PREFRONTAL]
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.left, self.right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerBasis {
    #[default]
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryScore {
    pub pair: ChannelPair,
    pub band: FrequencyBand,
    pub value: f64,
    pub left_power: f64,
    pub right_power: f64,
}

/// `|(L - R) / (L + R)|` on the chosen power basis (relative by default).
pub fn alpha_asymmetry(
    left: &BandPowers,
    right: &BandPowers,
    band: FrequencyBand,
    basis: PowerBasis,
) -> Result<AsymmetryScore> {
    let pick = |bp: &BandPowers| match basis {
        PowerBasis::Relative => bp.relative(band),
        PowerBasis::Absolute => bp.absolute(band),
    };
    let (l, r) = (pick(left), pick(right));
    Ok(AsymmetryScore {
        pair: ChannelPair {
            left: left.channel.clone(),
            right: right.channel.clone(),
        },
        band,
        value: asymmetry_index(l, r)?,
        left_power: l,
        right_power: r,
    })
}

pub fn asymmetry_index(left: f64, right: f64) -> Result<f64> {
    let sum = left + right;
    if sum <= 0.0 {
        return Err(Error::DegenerateAsymmetry);
    }
    Ok(((left - right) / sum).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxReference {
    /// Normalise by the largest band within the same channel.
    #[default]
    WithinChannel,
    /// Normalise by the largest value of the same band across channels.
    AcrossChannels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CordanceValue {
    pub channel: ChannelId,
    pub band: FrequencyBand,
    pub norm_abs: f64,
    pub norm_rel: f64,
    pub value: f64,
}

fn cordance_value(channel: &ChannelId, band: FrequencyBand, norm_abs: f64, norm_rel: f64) -> CordanceValue {
    CordanceValue {
        channel: channel.clone(),
        band,
        norm_abs,
        norm_rel,
        value: (norm_abs - 0.5) + (norm_rel - 0.5),
    }
}

/// Cordance for every band of one channel, normalising by the channel's
/// largest absolute and relative band powers.
pub fn cordance(bp: &BandPowers) -> Result<Vec<CordanceValue>> {
    let max_abs = bp.absolute.values().cloned().fold(0.0, f64::max);
    let max_rel = bp.relative.values().cloned().fold(0.0, f64::max);
    if max_abs <= 0.0 || max_rel <= 0.0 {
        return Err(Error::ZeroMaxPower);
    }
    Ok(FrequencyBand::ALL
        .iter()
        .map(|&b| cordance_value(&bp.channel, b, bp.absolute(b) / max_abs, bp.relative(b) / max_rel))
        .collect())
}

/// Cordance where each band is normalised by its maximum over the given channels.
pub fn cordance_across_channels(channels: &[BandPowers]) -> Result<Vec<Vec<CordanceValue>>> {
    let mut max_abs = BTreeMap::new();
    let mut max_rel = BTreeMap::new();
    for band in FrequencyBand::ALL {
        let a = channels.iter().map(|bp| bp.absolute(band)).fold(0.0, f64::max);
        let r = channels.iter().map(|bp| bp.relative(band)).fold(0.0, f64::max);
        if a <= 0.0 || r <= 0.0 {
            return Err(Error::ZeroMaxPower);
        }
        max_abs.insert(band, a);
        max_rel.insert(band, r);
    }
    Ok(channels
        .iter()
        .map(|bp| {
            FrequencyBand::ALL
                .iter()
                .map(|&b| cordance_value(&bp.channel, b, bp.absolute(b) / max_abs[&b], bp.relative(b) / max_rel[&b]))
                .collect()
        })
        .collect())
}

/// Options for deriving asymmetry and cordance columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureOptions {
    #[serde(default)]
    pub asymmetry_basis: PowerBasis,
    #[serde(default)]
    pub cordance_max: MaxReference,
}

pub fn rel_name(band: FrequencyBand, ch: &ChannelId) -> String {
    format!("rel_{}_{ch}", band.slug())
}

pub fn abs_db_name(band: FrequencyBand, ch: &ChannelId) -> String {
    format!("absdb_{}_{ch}", band.slug())
}

pub fn asym_name(band: FrequencyBand, pair: &ChannelPair) -> String {
    format!("asym_{}_{}", band.slug(), pair.label())
}

pub fn cord_name(band: FrequencyBand, ch: &ChannelId) -> String {
    format!("cord_{}_{ch}", band.slug())
}

/// Which features feed a classifier.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpec {
    /// Relative theta and relative low alpha on the four forehead channels.
    #[default]
    ThetaLowAlpha,
    Theta,
    LowAlpha,
    Asymmetry,
    Cordance,
    Columns(Vec<String>),
}

impl FeatureSpec {
    pub fn label(&self) -> String {
        match self {
            FeatureSpec::ThetaLowAlpha => "theta+lowalpha".into(),
            FeatureSpec::Theta => "theta".into(),
            FeatureSpec::LowAlpha => "lowalpha".into(),
            FeatureSpec::Asymmetry => "asymmetry".into(),
            FeatureSpec::Cordance => "cordance".into(),
            FeatureSpec::Columns(c) => c.join("+"),
        }
    }

    /// Ordered feature names.
    pub fn names(&self) -> Vec<String> {
        let rel = |band| ChannelId::FOREHEAD.iter().map(move |c| rel_name(band, c));
        match self {
            FeatureSpec::ThetaLowAlpha => rel(FrequencyBand::Theta).chain(rel(FrequencyBand::LowAlpha)).collect(),
            FeatureSpec::Theta => rel(FrequencyBand::Theta).collect(),
            FeatureSpec::LowAlpha => rel(FrequencyBand::LowAlpha).collect(),
            FeatureSpec::Asymmetry => [FrequencyBand::LowAlpha, FrequencyBand::HighAlpha]
                .iter()
                .flat_map(|&b| ChannelPair::forehead().into_iter().map(move |p| asym_name(b, &p)))
                .collect(),
            FeatureSpec::Cordance => ChannelId::FOREHEAD
                .iter()
                .map(|c| cord_name(FrequencyBand::Theta, c))
                .collect(),
            FeatureSpec::Columns(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub subject_id: String,
    pub session: Session,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Column names produced by [`session_features`], in order.
pub fn feature_columns() -> Vec<String> {
    let mut out = Vec::with_capacity(40);
    for ch in &ChannelId::FOREHEAD {
        for band in FrequencyBand::ALL {
            out.push(abs_db_name(band, ch));
            out.push(rel_name(band, ch));
        }
    }
    out.extend(FeatureSpec::Asymmetry.names());
    out.extend(FeatureSpec::Cordance.names());
    out
}

/// Every feature-table column for one session, in a fixed order: absolute dB
/// and relative power per channel and band, alpha asymmetry per pair, then
/// theta cordance per channel.
pub fn session_features(
    per_channel: &BTreeMap<ChannelId, BandPowers>,
    opts: &FeatureOptions,
) -> Result<Vec<(String, f64)>> {
    let get = |c: &ChannelId| per_channel.get(c).ok_or_else(|| Error::MissingChannel(c.clone()));
    let mut out = Vec::new();
    for ch in &ChannelId::FOREHEAD {
        let bp = get(ch)?;
        for band in FrequencyBand::ALL {
            out.push((abs_db_name(band, ch), bp.absolute_db(band)));
            out.push((rel_name(band, ch), bp.relative(band)));
        }
    }
    for band in [FrequencyBand::LowAlpha, FrequencyBand::HighAlpha] {
        for pair in ChannelPair::forehead() {
            let a = alpha_asymmetry(get(&pair.left)?, get(&pair.right)?, band, opts.asymmetry_basis)?;
            out.push((asym_name(band, &pair), a.value));
        }
    }
    let cords = match opts.cordance_max {
        MaxReference::WithinChannel => ChannelId::FOREHEAD
            .iter()
            .map(|c| cordance(get(c)?))
            .collect::<Result<Vec<_>>>()?,
        MaxReference::AcrossChannels => {
            let bps = ChannelId::FOREHEAD
                .iter()
                .map(|c| get(c).cloned())
                .collect::<Result<Vec<_>>>()?;
            cordance_across_channels(&bps)?
        }
    };
    for (ch, values) in ChannelId::FOREHEAD.iter().zip(cords) {
        let theta = values
            .iter()
            .find(|v| v.band == FrequencyBand::Theta)
            .expect("cordance covers every band");
        out.push((cord_name(FrequencyBand::Theta, ch), theta.value));
    }
    Ok(out)
}

pub fn build_feature_vector(
    subject_id: &str,
    session: Session,
    per_channel: &BTreeMap<ChannelId, BandPowers>,
    spec: &FeatureSpec,
    opts: &FeatureOptions,
) -> Result<FeatureVector> {
    let all: BTreeMap<String, f64> = session_features(per_channel, opts)?.into_iter().collect();
    let names = spec.names();
    let values = names
        .iter()
        .map(|n| all.get(n).copied().ok_or_else(|| Error::UnknownFeature(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector {
        subject_id: subject_id.to_string(),
        session,
        names,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::WelchParams;
    use proptest::prelude::*;

    fn flat(value: f64) -> PowerSpectrum {
        PowerSpectrum::from_bins(ChannelId::Fp1, 512.0, WelchParams::default(), vec![value; 513])
    }

    fn bp(channel: ChannelId, absolute: [f64; 4]) -> BandPowers {
        let total: f64 = absolute.iter().sum();
        let mut a = BTreeMap::new();
        let mut db = BTreeMap::new();
        let mut r = BTreeMap::new();
        for (b, v) in FrequencyBand::ALL.into_iter().zip(absolute) {
            a.insert(b, v);
            db.insert(b, power_to_db(v, DEFAULT_DB_FLOOR));
            r.insert(b, v / total);
        }
        BandPowers {
            channel,
            absolute: a,
            absolute_db: db,
            relative: r,
            total_power: total,
        }
    }

    #[test]
    fn band_power_counts_inclusive_bins() {
        assert_eq!(band_power(&flat(1.0), FrequencyBand::Theta).unwrap(), 8.0);
        assert_eq!(band_power(&flat(0.0), FrequencyBand::Theta).unwrap(), 0.0);
        let mut spike = flat(0.0);
        spike.power[18] = 3.0; // 9 Hz
        assert_eq!(band_power(&spike, FrequencyBand::LowAlpha).unwrap(), 3.0);
        assert_eq!(band_power(&spike, FrequencyBand::Theta).unwrap(), 0.0);
    }

    #[test]
    fn band_power_errors() {
        let short = PowerSpectrum::from_bins(ChannelId::Fp1, 512.0, WelchParams::default(), vec![1.0; 10]);
        assert!(matches!(band_power(&short, FrequencyBand::Theta), Err(Error::BandOutOfRange { .. })));
        let db = crate::spectrum::to_db(&flat(1.0), 1e-12).unwrap();
        assert!(matches!(band_power(&db, FrequencyBand::Theta), Err(Error::AlreadyDecibel)));
    }

    #[test]
    fn relative_power_of_flat_spectrum() {
        let r = relative_power(&flat(1.0)).unwrap();
        assert_eq!(r.total_power, 23.0);
        assert!((r.relative(FrequencyBand::Theta) - 8.0 / 23.0).abs() < 1e-12);
        let mut one = flat(0.0);
        one.power[4] = 2.5; // 2 Hz
        let r = relative_power(&one).unwrap();
        assert_eq!(r.relative(FrequencyBand::Delta), 1.0);
        assert_eq!(r.relative(FrequencyBand::Theta), 0.0);
        assert!(matches!(relative_power(&flat(0.0)), Err(Error::ZeroTotalPower)));
    }

    #[test]
    fn band_partition_audit() {
        // at 0.5 Hz bins the four bands take every one of the 23 bins in 1..12 Hz once
        let p = flat(1.0);
        let in_range: Vec<f64> = p.freqs_hz.iter().cloned().filter(|&f| (1.0..=12.0).contains(&f)).collect();
        assert_eq!(in_range.len(), 23);
        let mut covered = 0;
        for f in &in_range {
            let hits = FrequencyBand::ALL
                .iter()
                .filter(|b| *f >= b.lo_hz() && *f <= b.hi_hz())
                .count();
            assert!(hits <= 1, "bin {f} double counted");
            covered += hits;
        }
        assert_eq!(covered, 23);
        let total: f64 = relative_power(&p).unwrap().relative.values().sum();
        assert!((0.0..=1.0 + 1e-12).contains(&total));
    }

    #[test]
    fn asymmetry_examples() {
        assert_eq!(asymmetry_index(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(asymmetry_index(3.0, 1.0).unwrap(), 0.5);
        assert_eq!(asymmetry_index(0.0, 4.0).unwrap(), 1.0);
        assert!(matches!(asymmetry_index(0.0, 0.0), Err(Error::DegenerateAsymmetry)));

        let l = bp(ChannelId::Fp1, [1.0, 1.0, 3.0, 1.0]);
        let r = bp(ChannelId::Fp2, [1.0, 1.0, 1.0, 1.0]);
        let s = alpha_asymmetry(&l, &r, FrequencyBand::LowAlpha, PowerBasis::Absolute).unwrap();
        assert_eq!(s.value, 0.5);
        assert_eq!(s.pair, ChannelPair::MID_PREFRONTAL);
        let s = alpha_asymmetry(&l, &r, FrequencyBand::LowAlpha, PowerBasis::Relative).unwrap();
        let (pl, pr) = (3.0 / 6.0, 1.0 / 4.0);
        assert!((s.value - (pl - pr) / (pl + pr)).abs() < 1e-15);
    }

    #[test]
    fn cordance_hand_computed() {
        let c = cordance(&bp(ChannelId::AF7, [4.0, 2.0, 1.0, 1.0])).unwrap();
        let values: Vec<f64> = c.iter().map(|v| v.value).collect();
        for (got, want) in values.iter().zip([1.0, 0.0, -0.5, -0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
        let equal = cordance(&bp(ChannelId::AF7, [2.0; 4])).unwrap();
        assert!(equal.iter().all(|v| v.value == 1.0));
        assert!(matches!(cordance(&bp(ChannelId::AF7, [0.0; 4])), Err(Error::ZeroMaxPower)));
    }

    #[test]
    fn cross_channel_cordance_normalises_per_band() {
        let a = bp(ChannelId::Fp1, [4.0, 2.0, 1.0, 1.0]);
        let b = bp(ChannelId::Fp2, [2.0, 2.0, 2.0, 2.0]);
        let c = cordance_across_channels(&[a, b]).unwrap();
        // theta absolute is 2 in both channels, so norm_abs is 1 for both
        assert_eq!(c[0][1].norm_abs, 1.0);
        assert_eq!(c[1][1].norm_abs, 1.0);
        assert_eq!(c[0][2].norm_abs, 0.5);
    }

    fn four(per: [[f64; 4]; 4]) -> BTreeMap<ChannelId, BandPowers> {
        ChannelId::FOREHEAD
            .iter()
            .zip(per)
            .map(|(c, a)| (c.clone(), bp(c.clone(), a)))
            .collect()
    }

    #[test]
    fn feature_vectors() {
        let m = four([[1.0, 2.0, 3.0, 4.0], [2.0, 2.0, 3.0, 1.0], [1.0, 1.0, 1.0, 1.0], [5.0, 1.0, 2.0, 3.0]]);
        let opts = FeatureOptions::default();
        let v = build_feature_vector("S1", Session::Baseline, &m, &FeatureSpec::default(), &opts).unwrap();
        assert_eq!(v.values.len(), 8);
        assert_eq!(
            v.names,
            vec![
                "rel_theta_AF7",
                "rel_theta_Fp1",
                "rel_theta_Fp2",
                "rel_theta_AF8",
                "rel_lowalpha_AF7",
                "rel_lowalpha_Fp1",
                "rel_lowalpha_Fp2",
                "rel_lowalpha_AF8"
            ]
        );
        assert!((v.values[0] - 0.2).abs() < 1e-15);
        let c = build_feature_vector("S1", Session::Baseline, &m, &FeatureSpec::Cordance, &opts).unwrap();
        assert_eq!(c.values.len(), 4);
        let a = build_feature_vector("S1", Session::Baseline, &m, &FeatureSpec::Asymmetry, &opts).unwrap();
        assert_eq!(a.values.len(), 4);

        let mut missing = m.clone();
        missing.remove(&ChannelId::AF8);
        assert!(matches!(
            build_feature_vector("S1", Session::Baseline, &missing, &FeatureSpec::default(), &opts),
            Err(Error::MissingChannel(ChannelId::AF8))
        ));
    }

    #[test]
    fn session_feature_names_are_unique() {
        let m = four([[1.0, 2.0, 3.0, 4.0]; 4]);
        let f = session_features(&m, &FeatureOptions::default()).unwrap();
        let mut names: Vec<&String> = f.iter().map(|(n, _)| n).collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        assert_eq!(n, 32 + 4 + 4);
        let ordered: Vec<String> = f.into_iter().map(|(n, _)| n).collect();
        assert_eq!(ordered, feature_columns());
    }

    proptest! {
        #[test]
        fn relative_power_consistency(bins in proptest::collection::vec(0.0f64..100.0, 513), scale in 0.001f64..1000.0) {
            let mut psd = flat(0.0);
            psd.power = bins.clone();
            psd.power[10] += 1.0;
            let r = relative_power(&psd).unwrap();
            for band in FrequencyBand::ALL {
                prop_assert!((r.relative(band) * r.total_power - r.absolute(band)).abs() <= 1e-9 * r.absolute(band).max(1e-300));
                prop_assert!((0.0..=1.0).contains(&r.relative(band)));
            }
            // amplitude scaling by a multiplies power by a^2
            let mut scaled = psd.clone();
            scaled.power.iter_mut().for_each(|p| *p *= scale * scale);
            let s = relative_power(&scaled).unwrap();
            for band in FrequencyBand::ALL {
                prop_assert!((s.relative(band) - r.relative(band)).abs() <= 1e-9);
            }
            let c1 = cordance(&r).unwrap();
            let c2 = cordance(&s).unwrap();
            for (a, b) in c1.iter().zip(&c2) {
                prop_assert!((a.value - b.value).abs() <= 1e-9);
            }
        }

        #[test]
        fn asymmetry_is_symmetric_and_bounded(l in 0.0f64..10.0, r in 0.0f64..10.0) {
            prop_assume!(l + r > 0.0);
            let a = asymmetry_index(l, r).unwrap();
            prop_assert_eq!(a, asymmetry_index(r, l).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert_eq!(a == 0.0, l == r);
        }

        #[test]
        fn cordance_bounds(abs in proptest::array::uniform4(0.0f64..50.0)) {
            prop_assume!(abs.iter().any(|&v| v > 0.0));
            let c = cordance(&bp(ChannelId::Fp1, abs)).unwrap();
            for v in &c {
                prop_assert!(v.value > -1.0 - 1e-12 && v.value <= 1.0);
                prop_assert!((v.value - ((v.norm_abs - 0.5) + (v.norm_rel - 0.5))).abs() <= 1e-12);
            }
            prop_assert!(c.iter().any(|v| v.norm_abs == 1.0));
            prop_assert!(c.iter().any(|v| v.norm_rel == 1.0));
        }
    }
}
