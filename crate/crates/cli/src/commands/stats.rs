use std::collections::BTreeMap;

use qeeg::clinical::ResponseLabel;
use qeeg::stats::{baseline_comparisons, change_comparisons, group_compare, CompareOptions, ComparisonResult, ComparisonStatus};
use qeeg::table::FeatureTable;
use serde::Serialize;

use crate::config::{write_json, write_text, StudyConfig};
use crate::error::{CliError, Context};
use crate::render::{mean_sd, p_value, text_table};
use crate::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySummary {
    pub family: String,
    pub comparisons: usize,
    pub tested: usize,
    pub rejected_primary: usize,
    pub rejected_secondary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub options: CompareOptions,
    pub families: Vec<FamilySummary>,
    pub results: Vec<ComparisonResult>,
}

/// Families in first-appearance order.
fn summarize(results: &[ComparisonResult]) -> Vec<FamilySummary> {
    let mut order: Vec<String> = Vec::new();
    let mut by: BTreeMap<String, FamilySummary> = BTreeMap::new();
    for r in results {
        let s = by.entry(r.family.clone()).or_insert_with(|| {
            order.push(r.family.clone());
            FamilySummary {
                family: r.family.clone(),
                comparisons: 0,
                tested: 0,
                rejected_primary: 0,
                rejected_secondary: 0,
            }
        });
        s.comparisons += 1;
        s.tested += usize::from(r.status == ComparisonStatus::Ok);
        s.rejected_primary += usize::from(r.reject_primary);
        s.rejected_secondary += usize::from(r.reject_secondary);
    }
    order.into_iter().map(|f| by.remove(&f).expect("present")).collect()
}

pub fn compute(table: &FeatureTable, cfg: &StudyConfig) -> Result<StatsReport, CliError> {
    if table.rows.iter().all(|r| r.label == ResponseLabel::Unlabeled) {
        return Err(CliError::Core {
            context: "stats".into(),
            source: qeeg::Error::MalformedCohort("feature table has no responder labels".into()),
        });
    }
    let comparisons = match &cfg.stats.comparisons {
        Some(list) => list.clone(),
        None => baseline_comparisons().into_iter().chain(change_comparisons()).collect(),
    };
    let results = group_compare(table, &comparisons, &cfg.stats.options).context(|| "stats".to_string())?;
    Ok(StatsReport {
        options: cfg.stats.options,
        families: summarize(&results),
        results,
    })
}

pub fn render(report: &StatsReport) -> String {
    let mut out = String::new();
    let o = &report.options;
    out.push_str(&format!(
        "Hochberg within each family: * p_adj at {}  ** at {}\n\n",
        o.primary_alpha, o.secondary_alpha
    ));
    for fam in &report.families {
        out.push_str(&format!(
            "{} ({} tested, {} at {}, {} at {})\n",
            fam.family, fam.tested, fam.rejected_primary, o.primary_alpha, fam.rejected_secondary, o.secondary_alpha
        ));
        let rows: Vec<Vec<String>> = report
            .results
            .iter()
            .filter(|r| r.family == fam.family)
            .map(|r| {
                let ms = |i: usize| mean_sd(r.mean_sd[i].map(|m| m.0), r.mean_sd[i].map(|m| m.1), 4);
                let flag = if r.reject_secondary {
                    "**"
                } else if r.reject_primary {
                    "*"
                } else {
                    ""
                };
                vec![
                    r.feature.clone(),
                    r.groups.clone(),
                    format!("{}/{}", r.n1, r.n2),
                    ms(0),
                    ms(1),
                    r.statistic.map_or("n/a".into(), |s| format!("{}={s}", r.statistic_name)),
                    match r.status {
                        ComparisonStatus::Ok => p_value(r.p),
                        ComparisonStatus::InsufficientN => "insufficient n".into(),
                        ComparisonStatus::AllZeroDifferences => "no change".into(),
                    },
                    flag.into(),
                ]
            })
            .collect();
        out.push_str(&text_table(&["feature", "groups", "n", "first", "second", "statistic", "p", ""], &rows));
        out.push('\n');
    }
    out
}

pub const JSON: &str = "stats.json";
pub const TEXT: &str = "stats.txt";

/// Baseline responder comparisons and paired baseline-to-post changes.
pub fn run(cfg: &StudyConfig) -> Result<Outcome, CliError> {
    let config = cfg.prepare_output()?;
    let path = cfg.feature_table_path();
    let table = FeatureTable::load(&path).context(|| format!("feature table {}", path.display()))?;
    let report = compute(&table, cfg)?;
    let json = cfg.output_dir.join(JSON);
    write_json(&json, &report)?;
    let text = cfg.output_dir.join(TEXT);
    write_text(&text, &render(&report))?;
    Ok(Outcome {
        outputs: vec![config, json, text],
        failures: 0,
    })
}
