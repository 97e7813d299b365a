use qeeg::clinical::{cohort_summary, load_cohort_csv, CohortSummary};
use qeeg::signal::Manifest;

use crate::config::{write_json, write_text, StudyConfig};
use crate::error::{CliError, Context};
use crate::render::{mean_sd, text_table};
use crate::Outcome;

pub const JSON: &str = "report.json";
pub const TEXT: &str = "report.txt";

pub fn render(s: &CohortSummary) -> String {
    let rows: Vec<Vec<String>> = s
        .slices
        .iter()
        .map(|sl| {
            vec![
                sl.name.clone(),
                sl.n.to_string(),
                sl.responders.to_string(),
                mean_sd(sl.baseline.map(|m| m.mean), sl.baseline.map(|m| m.sd), 1),
                mean_sd(sl.at_score.map(|m| m.mean), sl.at_score.map(|m| m.sd), 1),
                mean_sd(sl.response_rate.map(|m| m.mean), sl.response_rate.map(|m| m.sd), 1),
            ]
        })
        .collect();
    format!(
        "HDRS by group, response assessed at {}\n\n{}",
        s.at,
        text_table(&["group", "n", "responders", "baseline HDRS", &format!("{} HDRS", s.at), "reduction %"], &rows)
    )
}

/// Cohort summary per arm and for pooled ketamine responders / non-responders.
pub fn run(cfg: &StudyConfig) -> Result<Outcome, CliError> {
    let config = cfg.prepare_output()?;
    let cohort_path = match &cfg.cohort_csv {
        Some(p) => p.clone(),
        None => {
            let m = cfg.manifest_path();
            Manifest::load(&m).context(|| format!("manifest {}", m.display()))?.cohort_csv
        }
    };
    let records = load_cohort_csv(&cohort_path, cfg.responder.threshold, cfg.responder.timepoint)
        .context(|| format!("cohort {}", cohort_path.display()))?;
    let summary = cohort_summary(&records, cfg.responder.timepoint).context(|| "report".to_string())?;
    let json = cfg.output_dir.join(JSON);
    write_json(&json, &summary)?;
    let text = cfg.output_dir.join(TEXT);
    write_text(&text, &render(&summary))?;
    Ok(Outcome {
        outputs: vec![config, json, text],
        failures: 0,
    })
}
