//! Wilcoxon rank-sum and signed-rank tests with exact small-sample p-values,
//! Hochberg step-up multiplicity control, and table-driven group comparisons.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::clinical::ResponseLabel;
use crate::error::{Error, Result};
use crate::features::{rel_name, FeatureSpec, FrequencyBand};
use crate::signal::{ChannelId, Session, TrialArm};
use crate::table::FeatureTable;

/// Largest total sample size for which exact enumeration is used.
pub const DEFAULT_EXACT_LIMIT: usize = 20;

pub const PRIMARY_ALPHA: f64 = 0.05;
pub const SECONDARY_ALPHA: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// First sample (or the paired difference) tends to be smaller.
    Less,
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    RankSumExact,
    RankSumNormal,
    SignedRankExact,
    SignedRankNormal,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TestMethod::RankSumExact => "rank-sum exact",
            TestMethod::RankSumNormal => "rank-sum normal",
            TestMethod::SignedRankExact => "signed-rank exact",
            TestMethod::SignedRankNormal => "signed-rank normal",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub alternative: Alternative,
    pub n1: usize,
    pub n2: usize,
}

/// Mid-ranks (1-based) and the sizes of tie groups larger than one.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn combine(p_less: f64, p_greater: f64, alt: Alternative) -> f64 {
    let p = match alt {
        Alternative::Less => p_less,
        Alternative::Greater => p_greater,
        Alternative::TwoSided => 2.0 * p_less.min(p_greater),
    };
    p.clamp(0.0, 1.0)
}

/// Counts of subsets of `{1..=n}` by (size, sum): `table[k][s]`.
fn subset_sum_counts(n: usize, max_k: usize) -> Vec<Vec<f64>> {
    let max_sum = n * (n + 1) / 2;
    let mut table = vec![vec![0.0; max_sum + 1]; max_k + 1];
    table[0][0] = 1.0;
    for r in 1..=n {
        for k in (1..=max_k.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                table[k][s] += table[k - 1][s - r];
            }
        }
    }
    table
}

/// One-sided tail probabilities `(P(S <= obs), P(S >= obs))` for an integer
/// statistic with the given count distribution.
fn tails(counts: &[f64], obs: usize) -> (f64, f64) {
    let total: f64 = counts.iter().sum();
    let le: f64 = counts[..=obs.min(counts.len() - 1)].iter().sum();
    let ge: f64 = counts[obs.min(counts.len())..].iter().sum();
    (le / total, ge / total)
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        Err(Error::NonFiniteObservation)
    } else {
        Ok(())
    }
}

/// Rank-sum test; the statistic is W, the rank sum of `x`.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64], alt: Alternative) -> Result<TestResult> {
    wilcoxon_rank_sum_with_limit(x, y, alt, DEFAULT_EXACT_LIMIT)
}

pub fn wilcoxon_rank_sum_with_limit(x: &[f64], y: &[f64], alt: Alternative, exact_limit: usize) -> Result<TestResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    check_finite(x)?;
    check_finite(y)?;
    let (n1, n2) = (x.len(), y.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let w: f64 = ranks[..n1].iter().sum();

    if n <= exact_limit && ties.is_empty() {
        let counts = subset_sum_counts(n, n1);
        let (le, ge) = tails(&counts[n1], w.round() as usize);
        return Ok(TestResult {
            statistic: w,
            p_value: combine(le, ge, alt),
            method: TestMethod::RankSumExact,
            alternative: alt,
            n1,
            n2,
        });
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let mean = n1f * (nf + 1.0) / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (nf * (nf - 1.0));
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term);
    let (le, ge) = normal_tails(w, mean, var);
    Ok(TestResult {
        statistic: w,
        p_value: combine(le, ge, alt),
        method: TestMethod::RankSumNormal,
        alternative: alt,
        n1,
        n2,
    })
}

/// Continuity-corrected normal tails; a zero variance means no evidence either way.
fn normal_tails(stat: f64, mean: f64, var: f64) -> (f64, f64) {
    if var <= 0.0 {
        return (1.0, 1.0);
    }
    let sd = var.sqrt();
    let le = normal_cdf((stat - mean + 0.5) / sd);
    let ge = normal_cdf(-(stat - mean - 0.5) / sd);
    (le.min(1.0), ge.min(1.0))
}

/// Signed-rank test on `after - before`; the statistic is T+, the rank sum
/// of positive differences. `Greater` tests for an increase.
pub fn wilcoxon_signed_rank(before: &[f64], after: &[f64], alt: Alternative) -> Result<TestResult> {
    wilcoxon_signed_rank_with_limit(before, after, alt, DEFAULT_EXACT_LIMIT)
}

pub fn wilcoxon_signed_rank_with_limit(before: &[f64], after: &[f64], alt: Alternative, exact_limit: usize) -> Result<TestResult> {
    if before.len() != after.len() {
        return Err(Error::LengthMismatch(before.len(), after.len()));
    }
    if before.is_empty() {
        return Err(Error::EmptySample);
    }
    check_finite(before)?;
    check_finite(after)?;
    let diffs: Vec<f64> = before
        .iter()
        .zip(after)
        .map(|(b, a)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::AllZeroDifferences);
    }
    let n = diffs.len();
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = midranks(&mags);
    let t_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();

    if n <= exact_limit && ties.is_empty() {
        // each sign pattern of ranks 1..n is equally likely; count T+ over all 2^n
        let table = subset_sum_counts(n, n);
        let max_sum = n * (n + 1) / 2;
        let counts: Vec<f64> = (0..=max_sum).map(|s| (0..=n).map(|k| table[k][s]).sum()).collect();
        let (le, ge) = tails(&counts, t_plus.round() as usize);
        return Ok(TestResult {
            statistic: t_plus,
            p_value: combine(le, ge, alt),
            method: TestMethod::SignedRankExact,
            alternative: alt,
            n1: n,
            n2: n,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let (le, ge) = normal_tails(t_plus, mean, var);
    Ok(TestResult {
        statistic: t_plus,
        p_value: combine(le, ge, alt),
        method: TestMethod::SignedRankNormal,
        alternative: alt,
        n1: n,
        n2: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedResults {
    pub raw_p: Vec<f64>,
    /// Hochberg-adjusted p-values, in input order.
    pub adjusted_p: Vec<f64>,
    pub reject: Vec<bool>,
    pub alpha: f64,
}

impl AdjustedResults {
    pub fn rejected(&self) -> usize {
        self.reject.iter().filter(|r| **r).count()
    }
}

/// Hochberg step-up: with ascending `p(1..m)`, reject `1..k` for the largest
/// `k` such that `p(k) <= alpha / (m - k + 1)`.
pub fn hochberg_adjust(p_values: &[f64], alpha: f64) -> Result<AdjustedResults> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidPValue(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));

    let k = (1..=m)
        .rev()
        .find(|&k| p_values[order[k - 1]] <= alpha / (m - k + 1) as f64)
        .unwrap_or(0);
    let mut reject = vec![false; m];
    for &i in &order[..k] {
        reject[i] = true;
    }

    let mut adjusted_p = vec![0.0; m];
    let mut running = 1.0f64;
    for pos in (0..m).rev() {
        let i = order[pos];
        running = running.min((m - pos) as f64 * p_values[i]).min(1.0);
        adjusted_p[i] = running;
    }

    Ok(AdjustedResults {
        raw_p: p_values.to_vec(),
        adjusted_p,
        reject,
        alpha,
    })
}

/// Subset of table rows: any of `arms`, optionally restricted to one label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    pub name: String,
    pub arms: Vec<TrialArm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<ResponseLabel>,
}

impl Selector {
    pub fn new(name: impl Into<String>, arms: &[TrialArm], label: Option<ResponseLabel>) -> Self {
        Self {
            name: name.into(),
            arms: arms.to_vec(),
            label,
        }
    }

    pub fn matches(&self, group: TrialArm, label: ResponseLabel) -> bool {
        self.arms.contains(&group) && self.label.is_none_or(|l| l == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum Comparison {
    /// Independent groups within one session.
    RankSum {
        family: String,
        feature: String,
        session: Session,
        a: Selector,
        b: Selector,
    },
    /// Paired sessions within one group, matched by subject id.
    SignedRank {
        family: String,
        feature: String,
        group: Selector,
        before: Session,
        after: Session,
    },
}

impl Comparison {
    pub fn family(&self) -> &str {
        match self {
            Comparison::RankSum { family, .. } | Comparison::SignedRank { family, .. } => family,
        }
    }

    pub fn feature(&self) -> &str {
        match self {
            Comparison::RankSum { feature, .. } | Comparison::SignedRank { feature, .. } => feature,
        }
    }

    pub fn groups(&self) -> String {
        match self {
            Comparison::RankSum { a, b, session, .. } => format!("{} vs {} ({session})", a.name, b.name),
            Comparison::SignedRank { group, before, after, .. } => format!("{}: {before} vs {after}", group.name),
        }
    }
}

/// Relative band power on every forehead channel, band-major.
fn relative_columns() -> Vec<String> {
    FrequencyBand::ALL
        .iter()
        .flat_map(|&b| ChannelId::FOREHEAD.iter().map(move |c| rel_name(b, c)))
        .collect()
}

/// Baseline responders vs non-responders on relative power, one family per
/// slice (arm A, arm B, both ketamine arms), plus responders of A vs B.
pub fn baseline_comparisons() -> Vec<Comparison> {
    use ResponseLabel::{NonResponder, Responder};
    let ket = [TrialArm::AKet05, TrialArm::BKet02];
    let mut families: Vec<(String, Selector, Selector)> = Vec::new();
    for (name, arms) in [("A", &ket[..1]), ("B", &ket[1..]), ("A+B", &ket[..])] {
        families.push((
            format!("baseline {name}"),
            Selector::new(format!("{name} responders"), arms, Some(Responder)),
            Selector::new(format!("{name} non-responders"), arms, Some(NonResponder)),
        ));
    }
    families.push((
        "baseline responders A vs B".into(),
        Selector::new("A responders", &ket[..1], Some(Responder)),
        Selector::new("B responders", &ket[1..], Some(Responder)),
    ));
    let cols = relative_columns();
    families
        .into_iter()
        .flat_map(|(family, a, b)| {
            cols.iter().map(move |f| Comparison::RankSum {
                family: family.clone(),
                feature: f.clone(),
                session: Session::Baseline,
                a: a.clone(),
                b: b.clone(),
            })
        })
        .collect()
}

/// Baseline vs post within ketamine responders, ketamine non-responders and
/// saline, on relative power, alpha asymmetry and theta cordance.
pub fn change_comparisons() -> Vec<Comparison> {
    use ResponseLabel::{NonResponder, Responder};
    let ket = [TrialArm::AKet05, TrialArm::BKet02];
    let groups = [
        ("change ketamine responders", Selector::new("ketamine responders", &ket, Some(Responder))),
        ("change ketamine non-responders", Selector::new("ketamine non-responders", &ket, Some(NonResponder))),
        ("change saline", Selector::new("saline", &[TrialArm::CSaline], None)),
    ];
    let mut cols = relative_columns();
    cols.extend(FeatureSpec::Asymmetry.names());
    cols.extend(FeatureSpec::Cordance.names());
    groups
        .into_iter()
        .flat_map(|(family, group)| {
            cols.iter().map(move |f| Comparison::SignedRank {
                family: family.to_string(),
                feature: f.clone(),
                group: group.clone(),
                before: Session::Baseline,
                after: Session::Post240,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonStatus {
    Ok,
    InsufficientN,
    AllZeroDifferences,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub family: String,
    pub feature: String,
    pub groups: String,
    pub status: ComparisonStatus,
    /// "W" for rank-sum, "T" (T+) for signed-rank.
    pub statistic_name: String,
    pub statistic: Option<f64>,
    pub p: Option<f64>,
    pub method: Option<TestMethod>,
    pub n1: usize,
    pub n2: usize,
    /// Median of `a` minus median of `b`, or median paired difference (after - before).
    pub effect: Option<f64>,
    /// Group means, for rendering (`a`/before first).
    pub mean_sd: [Option<(f64, f64)>; 2],
    pub reject_primary: bool,
    pub reject_secondary: bool,
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    crate::clinical::MeanSd::of(values).map(|m| (m.mean, m.sd))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareOptions {
    pub min_per_group: usize,
    pub alternative: Alternative,
    pub exact_limit: usize,
    pub primary_alpha: f64,
    pub secondary_alpha: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            min_per_group: 2,
            alternative: Alternative::TwoSided,
            exact_limit: DEFAULT_EXACT_LIMIT,
            primary_alpha: PRIMARY_ALPHA,
            secondary_alpha: SECONDARY_ALPHA,
        }
    }
}

/// Runs every comparison, then applies Hochberg within each family at the
/// primary and secondary levels. Comparisons that could not be tested are
/// reported but do not enter the family.
pub fn group_compare(table: &FeatureTable, comparisons: &[Comparison], opts: &CompareOptions) -> Result<Vec<ComparisonResult>> {
    let mut results = Vec::with_capacity(comparisons.len());
    for cmp in comparisons {
        let col = table.column_index(cmp.feature())?;
        let mut res = ComparisonResult {
            family: cmp.family().to_string(),
            feature: cmp.feature().to_string(),
            groups: cmp.groups(),
            status: ComparisonStatus::Ok,
            statistic_name: String::new(),
            statistic: None,
            p: None,
            method: None,
            n1: 0,
            n2: 0,
            effect: None,
            mean_sd: [None, None],
            reject_primary: false,
            reject_secondary: false,
        };
        match cmp {
            Comparison::RankSum { session, a, b, .. } => {
                res.statistic_name = "W".into();
                let pick = |sel: &Selector| -> Vec<f64> {
                    table
                        .rows
                        .iter()
                        .filter(|r| r.session == *session && sel.matches(r.group, r.label))
                        .map(|r| r.values[col])
                        .collect()
                };
                let (xa, xb) = (pick(a), pick(b));
                res.n1 = xa.len();
                res.n2 = xb.len();
                res.mean_sd = [mean_sd(&xa), mean_sd(&xb)];
                if xa.len() < opts.min_per_group || xb.len() < opts.min_per_group {
                    res.status = ComparisonStatus::InsufficientN;
                } else {
                    let t = wilcoxon_rank_sum_with_limit(&xa, &xb, opts.alternative, opts.exact_limit)?;
                    res.statistic = Some(t.statistic);
                    res.p = Some(t.p_value);
                    res.method = Some(t.method);
                    res.effect = Some(median(&xa).unwrap_or(0.0) - median(&xb).unwrap_or(0.0));
                }
            }
            Comparison::SignedRank { group, before, after, .. } => {
                res.statistic_name = "T".into();
                let first = table.by_subject(*before);
                let second = table.by_subject(*after);
                let (mut xb, mut xa) = (Vec::new(), Vec::new());
                for (id, row) in &first {
                    if !group.matches(row.group, row.label) {
                        continue;
                    }
                    if let Some(other) = second.get(id) {
                        xb.push(row.values[col]);
                        xa.push(other.values[col]);
                    }
                }
                res.n1 = xb.len();
                res.n2 = xa.len();
                res.mean_sd = [mean_sd(&xb), mean_sd(&xa)];
                if xb.len() < opts.min_per_group {
                    res.status = ComparisonStatus::InsufficientN;
                } else {
                    match wilcoxon_signed_rank_with_limit(&xb, &xa, opts.alternative, opts.exact_limit) {
                        Ok(t) => {
                            res.statistic = Some(t.statistic);
                            res.p = Some(t.p_value);
                            res.method = Some(t.method);
                            let d: Vec<f64> = xb.iter().zip(&xa).map(|(b, a)| a - b).collect();
                            res.effect = median(&d);
                        }
                        Err(Error::AllZeroDifferences) => res.status = ComparisonStatus::AllZeroDifferences,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        results.push(res);
    }

    let mut families: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in results.iter().enumerate() {
        if r.p.is_some() {
            families.entry(r.family.clone()).or_default().push(i);
        }
    }
    for idx in families.values() {
        let ps: Vec<f64> = idx.iter().map(|&i| results[i].p.unwrap()).collect();
        let primary = hochberg_adjust(&ps, opts.primary_alpha)?;
        let secondary = hochberg_adjust(&ps, opts.secondary_alpha)?;
        for (j, &i) in idx.iter().enumerate() {
            results[i].reject_primary = primary.reject[j];
            results[i].reject_secondary = secondary.reject[j];
        }
    }
    Ok(results)
}
