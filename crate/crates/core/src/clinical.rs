//! HDRS-17 trajectories, responder labelling and cohort summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::TrialArm;

pub const HDRS_MAX: f64 = 52.0;
pub const DEFAULT_THRESHOLD: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Timepoint {
    #[serde(rename = "t0")]
    Min0,
    #[serde(rename = "t40")]
    Min40,
    #[serde(rename = "t80")]
    Min80,
    #[serde(rename = "t120")]
    Min120,
    #[serde(rename = "t240")]
    Min240,
    #[serde(rename = "d2")]
    Day2,
    #[serde(rename = "d3")]
    Day3,
    #[serde(rename = "d4")]
    Day4,
    #[serde(rename = "d5")]
    Day5,
    #[serde(rename = "d6")]
    Day6,
    #[serde(rename = "d7")]
    Day7,
    #[serde(rename = "d14")]
    Day14,
}

impl Timepoint {
    pub const ALL: [Timepoint; 12] = [
        Timepoint::Min0,
        Timepoint::Min40,
        Timepoint::Min80,
        Timepoint::Min120,
        Timepoint::Min240,
        Timepoint::Day2,
        Timepoint::Day3,
        Timepoint::Day4,
        Timepoint::Day5,
        Timepoint::Day6,
        Timepoint::Day7,
        Timepoint::Day14,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Timepoint::Min0 => "t0",
            Timepoint::Min40 => "t40",
            Timepoint::Min80 => "t80",
            Timepoint::Min120 => "t120",
            Timepoint::Min240 => "t240",
            Timepoint::Day2 => "d2",
            Timepoint::Day3 => "d3",
            Timepoint::Day4 => "d4",
            Timepoint::Day5 => "d5",
            Timepoint::Day6 => "d6",
            Timepoint::Day7 => "d7",
            Timepoint::Day14 => "d14",
        }
    }
}

impl fmt::Display for Timepoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Timepoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Timepoint::ALL
            .into_iter()
            .find(|t| t.column() == s)
            .ok_or_else(|| Error::MissingTimepoint(s.to_string()))
    }
}

/// HDRS-17 scores by timepoint. Scores are stored as reals so that group
/// means can be fed through the same arithmetic; individual ratings are
/// integers in practice.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HdrsSeries {
    scores: BTreeMap<Timepoint, f64>,
}

impl HdrsSeries {
    pub fn new(scores: impl IntoIterator<Item = (Timepoint, f64)>) -> Result<Self> {
        let scores: BTreeMap<_, _> = scores.into_iter().collect();
        for &v in scores.values() {
            if !(0.0..=HDRS_MAX).contains(&v) {
                return Err(Error::ScoreOutOfRange(v));
            }
        }
        if !scores.contains_key(&Timepoint::Min0) {
            return Err(Error::MissingTimepoint(Timepoint::Min0.to_string()));
        }
        Ok(Self { scores })
    }

    pub fn get(&self, t: Timepoint) -> Option<f64> {
        self.scores.get(&t).copied()
    }

    pub fn baseline(&self) -> f64 {
        self.scores[&Timepoint::Min0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Timepoint, f64)> + '_ {
        self.scores.iter().map(|(t, v)| (*t, *v))
    }
}

/// Fractional reduction from baseline: `(baseline - score_at) / baseline`.
pub fn percent_reduction(hdrs: &HdrsSeries, at: Timepoint) -> Result<f64> {
    let base = hdrs.baseline();
    let later = hdrs.get(at).ok_or_else(|| Error::MissingTimepoint(at.to_string()))?;
    if base <= 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok((base - later) / base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseLabel {
    Responder,
    NonResponder,
    Unlabeled,
}

impl ResponseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseLabel::Responder => "responder",
            ResponseLabel::NonResponder => "non_responder",
            ResponseLabel::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for ResponseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResponseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "responder" => Ok(ResponseLabel::Responder),
            "non_responder" => Ok(ResponseLabel::NonResponder),
            "unlabeled" | "" => Ok(ResponseLabel::Unlabeled),
            other => Err(Error::MalformedCohort(format!("unknown label `{other}`"))),
        }
    }
}

/// Responder iff the reduction at `at` is at least `threshold` (inclusive).
pub fn label_responder(hdrs: &HdrsSeries, threshold: f64, at: Timepoint) -> Result<ResponseLabel> {
    let r = percent_reduction(hdrs, at)?;
    // absorb representation error so that e.g. 20 -> 11 sits exactly on 0.45
    Ok(if r >= threshold - 1e-12 {
        ResponseLabel::Responder
    } else {
        ResponseLabel::NonResponder
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub group: TrialArm,
    pub hdrs: HdrsSeries,
    pub label: ResponseLabel,
}

impl SubjectRecord {
    /// Labels the subject when both baseline and `at` are available, otherwise
    /// leaves it unlabeled.
    pub fn labeled(subject_id: impl Into<String>, group: TrialArm, hdrs: HdrsSeries, threshold: f64, at: Timepoint) -> Result<Self> {
        let label = match hdrs.get(at) {
            Some(_) => label_responder(&hdrs, threshold, at)?,
            None => ResponseLabel::Unlabeled,
        };
        Ok(Self {
            subject_id: subject_id.into(),
            group,
            hdrs,
            label,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Sample statistics (n - 1 denominator). A single value has SD 0.
    /// Values are summed in sorted order so the result does not depend on
    /// input order.
    pub fn of(values: &[f64]) -> Option<MeanSd> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
            dev.sort_by(f64::total_cmp);
            (dev.iter().sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanSd { n, mean, sd })
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1} ± {:.1}", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSummary {
    pub name: String,
    pub n: usize,
    pub responders: usize,
    pub baseline: Option<MeanSd>,
    pub at_score: Option<MeanSd>,
    /// Percent reduction, as a percentage.
    pub response_rate: Option<MeanSd>,
    /// Set when the slice holds one subject and SDs are degenerate.
    pub single_subject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub at: Timepoint,
    pub slices: Vec<SliceSummary>,
}

fn summarize(name: &str, records: &[&SubjectRecord], at: Timepoint) -> SliceSummary {
    let base: Vec<f64> = records.iter().map(|r| r.hdrs.baseline()).collect();
    let later: Vec<f64> = records.iter().filter_map(|r| r.hdrs.get(at)).collect();
    let rates: Vec<f64> = records
        .iter()
        .filter_map(|r| percent_reduction(&r.hdrs, at).ok())
        .map(|v| 100.0 * v)
        .collect();
    SliceSummary {
        name: name.to_string(),
        n: records.len(),
        responders: records.iter().filter(|r| r.label == ResponseLabel::Responder).count(),
        baseline: MeanSd::of(&base),
        at_score: MeanSd::of(&later),
        response_rate: MeanSd::of(&rates),
        single_subject: records.len() == 1,
    }
}

/// Per-arm summaries followed by pooled ketamine responders and non-responders.
/// Arms without subjects are omitted.
pub fn cohort_summary(records: &[SubjectRecord], at: Timepoint) -> Result<CohortSummary> {
    if records.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let mut slices = Vec::new();
    for arm in TrialArm::ALL {
        let members: Vec<&SubjectRecord> = records.iter().filter(|r| r.group == arm).collect();
        if !members.is_empty() {
            slices.push(summarize(arm.code(), &members, at));
        }
    }
    for (name, label) in [
        ("ketamine responders", ResponseLabel::Responder),
        ("ketamine non-responders", ResponseLabel::NonResponder),
    ] {
        let members: Vec<&SubjectRecord> = records
            .iter()
            .filter(|r| r.group.is_ketamine() && r.label == label)
            .collect();
        if !members.is_empty() {
            slices.push(summarize(name, &members, at));
        }
    }
    Ok(CohortSummary { at, slices })
}

const COHORT_HEADER: &str = "subject_id,group";

/// Parses the cohort CSV and labels each subject at `at` with `threshold`.
pub fn parse_cohort_csv(text: &str, threshold: f64, at: Timepoint) -> Result<Vec<SubjectRecord>> {
    let csv = crate::csvio::read(text).map_err(|e| match e {
        Error::RaggedRow { row, expected, found } => {
            Error::MalformedCohort(format!("row {row}: expected {expected} fields, found {found}"))
        }
        other => Error::MalformedCohort(other.to_string()),
    })?;
    let cols = &csv.header;
    if cols.is_empty() {
        return Err(Error::EmptyCohort);
    }
    if cols.len() < 3 || cols[0] != "subject_id" || cols[1] != "group" {
        return Err(Error::MalformedCohort(format!("bad header `{}`", cols.join(","))));
    }
    let timepoints = cols[2..]
        .iter()
        .map(|c| c.parse::<Timepoint>().map_err(|_| Error::MalformedCohort(format!("unknown column `{c}`"))))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for (row, cells) in csv.rows.iter().enumerate() {
        let group: TrialArm = cells[1].parse()?;
        let mut scores = Vec::new();
        for (t, cell) in timepoints.iter().zip(cells.iter().skip(2)) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::MalformedCohort(format!("row {row}: cannot parse `{cell}`")))?;
            scores.push((*t, v));
        }
        let hdrs = HdrsSeries::new(scores)?;
        out.push(SubjectRecord::labeled(&cells[0], group, hdrs, threshold, at)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok(out)
}

pub fn load_cohort_csv(path: impl AsRef<Path>, threshold: f64, at: Timepoint) -> Result<Vec<SubjectRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cohort_csv(&text, threshold, at)
}

pub fn cohort_csv_string(records: &[SubjectRecord]) -> String {
    let header = COHORT_HEADER
        .split(',')
        .map(String::from)
        .chain(Timepoint::ALL.iter().map(|t| t.column().to_string()))
        .collect::<Vec<_>>();
    let rows = records.iter().map(|r| {
        [r.subject_id.clone(), r.group.to_string()]
            .into_iter()
            .chain(Timepoint::ALL.iter().map(|t| r.hdrs.get(*t).map_or_else(String::new, |v| v.to_string())))
            .collect::<Vec<_>>()
    });
    crate::csvio::write(std::iter::once(header).chain(rows))
}
