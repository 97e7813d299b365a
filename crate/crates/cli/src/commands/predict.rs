use qeeg::ml::{loso_cv, three_fold_cv, Class, Dataset, EvalReport, MetricSummary, Metrics, ModelKind, SummaryStat};
use qeeg::signal::{Session, TrialArm};
use qeeg::table::FeatureTable;
use serde::Serialize;

use crate::config::{write_json, write_text, StudyConfig};
use crate::error::{CliError, Context};
use crate::render::{grouped_bars_svg, mean_sd, opt, text_table, Bar, BarGroup};
use crate::Outcome;

pub const JSON: &str = "predict.json";
pub const TEXT: &str = "predict.txt";
pub const SVG: &str = "predict.svg";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub feature_set: String,
    pub classifier: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sd: Option<MetricSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GridCell {
    fn accuracy(&self) -> Option<SummaryStat> {
        self.mean_sd.map(|m| m.accuracy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosoCell {
    pub arm: TrialArm,
    pub classifier: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictReport {
    pub arms: Vec<TrialArm>,
    pub responders: usize,
    pub non_responders: usize,
    pub repeats: usize,
    pub seed: u64,
    pub grid: Vec<GridCell>,
    /// Highest mean 3-fold accuracy; ties go to the earlier cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_feature_set: Option<String>,
    pub loso: Vec<LosoCell>,
}

impl PredictReport {
    pub fn failures(&self) -> usize {
        self.grid.iter().filter(|c| c.error.is_some()).count() + self.loso.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn cell(&self, feature_set: &str, kind: ModelKind) -> Option<&GridCell> {
        self.grid.iter().find(|c| c.feature_set == feature_set && c.classifier == kind)
    }
}

pub fn compute(table: &FeatureTable, cfg: &StudyConfig) -> Result<PredictReport, CliError> {
    let p = &cfg.predict;
    let hp = &p.hyperparams;
    let probe = Dataset::from_table(table, Session::Baseline, &p.arms, &[]).context(|| "predict".to_string())?;
    let (pos, neg) = (probe.count(Class::Responder), probe.count(Class::NonResponder));
    if pos == 0 || neg == 0 {
        return Err(CliError::Core {
            context: "predict: baseline rows of the selected arms".into(),
            source: qeeg::Error::SingleClass,
        });
    }

    let mut grid = Vec::new();
    let mut best: Option<(f64, EvalReport, String)> = None;
    for fs in &p.feature_sets {
        let names = fs.names();
        let data = Dataset::from_table(table, Session::Baseline, &p.arms, &names);
        for &kind in &p.classifiers {
            let result = data
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|d| three_fold_cv(d, kind, hp, cfg.seed, p.repeats).map_err(|e| e.to_string()));
            let cell = match result {
                Ok(rep) => {
                    let acc = rep.mean_sd.accuracy.mean.unwrap_or(f64::NEG_INFINITY);
                    let cell = GridCell {
                        feature_set: fs.label(),
                        classifier: kind,
                        mean_sd: Some(rep.mean_sd),
                        pooled: Some(rep.pooled),
                        error: None,
                    };
                    if best.as_ref().is_none_or(|b| acc > b.0) {
                        best = Some((acc, rep, fs.label()));
                    }
                    cell
                }
                Err(e) => GridCell {
                    feature_set: fs.label(),
                    classifier: kind,
                    mean_sd: None,
                    pooled: None,
                    error: Some(e),
                },
            };
            grid.push(cell);
        }
    }

    let mut loso = Vec::new();
    if let Some((_, rep, _)) = &best {
        for &arm in &p.loso_arms {
            let data = Dataset::from_table(table, Session::Baseline, &[arm], &rep.feature_names);
            for &kind in &p.classifiers {
                let r = data
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|d| loso_cv(d, kind, hp, cfg.seed).map_err(|e| e.to_string()));
                loso.push(match r {
                    Ok(rep) => LosoCell {
                        arm,
                        classifier: kind,
                        folds: Some(rep.per_fold.len()),
                        pooled: Some(rep.pooled),
                        error: None,
                    },
                    Err(e) => LosoCell {
                        arm,
                        classifier: kind,
                        folds: None,
                        pooled: None,
                        error: Some(e),
                    },
                });
            }
        }
    }

    let (best, best_feature_set) = match best {
        Some((_, rep, fs)) => (Some(rep), Some(fs)),
        None => (None, None),
    };
    Ok(PredictReport {
        arms: p.arms.clone(),
        responders: pos,
        non_responders: neg,
        repeats: p.repeats,
        seed: cfg.seed,
        grid,
        best,
        best_feature_set,
        loso,
    })
}

fn feature_sets(report: &PredictReport) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in &report.grid {
        if !out.contains(&c.feature_set) {
            out.push(c.feature_set.clone());
        }
    }
    out
}

fn kinds(report: &PredictReport) -> Vec<ModelKind> {
    let mut out = Vec::new();
    for c in &report.grid {
        if !out.contains(&c.classifier) {
            out.push(c.classifier);
        }
    }
    out
}

pub fn render(report: &PredictReport) -> String {
    let sets = feature_sets(report);
    let arms: Vec<&str> = report.arms.iter().map(|a| a.code()).collect();
    let mut out = format!(
        "Baseline prediction, arms {} ({} responders, {} non-responders)\nStratified 3-fold CV x {} repeats, seed {}; accuracy % mean ± SD\n\n",
        arms.join("+"),
        report.responders,
        report.non_responders,
        report.repeats,
        report.seed
    );
    let mut headers = vec!["classifier"];
    headers.extend(sets.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = kinds(report)
        .into_iter()
        .map(|k| {
            let mut row = vec![k.name().to_string()];
            for s in &sets {
                row.push(match report.cell(s, k) {
                    Some(GridCell { mean_sd: Some(m), .. }) => mean_sd(m.accuracy.mean, m.accuracy.sd, 1),
                    _ => "error".into(),
                });
            }
            row
        })
        .collect();
    out.push_str(&text_table(&headers, &rows));

    if let (Some(best), Some(fs)) = (&report.best, &report.best_feature_set) {
        out.push_str(&format!("\nBest cell: {} on {}\n", best.kind.name(), fs));
        let m = &best.mean_sd;
        let row = |name: &str, s: &SummaryStat| {
            vec![name.to_string(), mean_sd(s.mean, s.sd, 1), s.n.to_string(), s.excluded.to_string()]
        };
        let rows = vec![
            row("accuracy", &m.accuracy),
            row("sensitivity (recall)", &m.sensitivity),
            row("specificity", &m.specificity),
            row("precision", &m.precision),
            row("f-measure", &m.f_measure),
        ];
        out.push_str(&text_table(&["metric", "mean ± SD %", "folds", "undefined"], &rows));
    }

    if !report.loso.is_empty() {
        out.push_str("\nLeave-one-subject-out per arm (pooled over folds, %)\n");
        let rows: Vec<Vec<String>> = report
            .loso
            .iter()
            .map(|c| match (&c.pooled, &c.error) {
                (Some(m), _) => vec![
                    c.arm.code().to_string(),
                    c.classifier.name().to_string(),
                    c.folds.unwrap_or(0).to_string(),
                    format!("{:.1}", m.accuracy),
                    opt(m.sensitivity, 1),
                    opt(m.specificity, 1),
                    opt(m.precision, 1),
                    opt(m.f_measure, 1),
                ],
                (None, e) => {
                    let mut r = vec![c.arm.code().to_string(), c.classifier.name().to_string(), "0".into()];
                    r.push(format!("error: {}", e.clone().unwrap_or_default()));
                    r.extend(std::iter::repeat_n(String::new(), 4));
                    r
                }
            })
            .collect();
        out.push_str(&text_table(
            &["arm", "classifier", "folds", "accuracy", "sensitivity", "specificity", "precision", "f-measure"],
            &rows,
        ));
    }
    out
}

pub fn svg(report: &PredictReport) -> String {
    let groups: Vec<BarGroup> = feature_sets(report)
        .into_iter()
        .map(|fs| BarGroup {
            bars: kinds(report)
                .into_iter()
                .map(|k| {
                    let acc = report.cell(&fs, k).and_then(GridCell::accuracy);
                    Bar {
                        label: k.name().to_string(),
                        value: acc.and_then(|a| a.mean),
                        error: acc.and_then(|a| a.sd),
                    }
                })
                .collect(),
            label: fs,
        })
        .collect();
    grouped_bars_svg("3-fold accuracy by classifier and feature set", "accuracy (%)", &groups)
}

/// Classifier x feature-set grid on pooled arms plus per-arm LOSO.
pub fn run(cfg: &StudyConfig) -> Result<Outcome, CliError> {
    let config = cfg.prepare_output()?;
    let path = cfg.feature_table_path();
    let table = FeatureTable::load(&path).context(|| format!("feature table {}", path.display()))?;
    let report = compute(&table, cfg)?;
    let json = cfg.output_dir.join(JSON);
    write_json(&json, &report)?;
    let text = cfg.output_dir.join(TEXT);
    write_text(&text, &render(&report))?;
    let chart = cfg.output_dir.join(SVG);
    write_text(&chart, &svg(&report))?;
    Ok(Outcome {
        outputs: vec![config, json, text, chart],
        failures: report.failures(),
    })
}
