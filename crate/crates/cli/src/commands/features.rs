use std::collections::BTreeMap;
use std::path::PathBuf;

use qeeg::clinical::{load_cohort_csv, ResponseLabel};
use qeeg::features::feature_columns;
use qeeg::pipeline::feature_row;
use qeeg::signal::{load_recording, load_sidecar, validate_recording, Finding, Manifest, ManifestEntry, Session, TrialArm};
use qeeg::table::{FeatureRow, FeatureTable};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{write_json, StudyConfig};
use crate::error::{CliError, Context};
use crate::Outcome;

pub const TABLE: &str = "features.csv";
pub const ERRORS: &str = "feature_errors.json";
pub const FINDINGS: &str = "findings.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordingError {
    pub recording_csv: PathBuf,
    pub sidecar_json: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordingFindings {
    pub subject_id: String,
    pub session: Session,
    pub findings: Vec<Finding>,
}

type Processed = (FeatureRow, Vec<Finding>);

fn process(entry: &ManifestEntry, labels: &BTreeMap<String, (TrialArm, ResponseLabel)>, cfg: &StudyConfig) -> Result<Processed, RecordingError> {
    let fail = |subject_id: Option<String>, error: String| RecordingError {
        recording_csv: entry.recording_csv.clone(),
        sidecar_json: entry.sidecar_json.clone(),
        subject_id,
        error,
    };
    let sidecar = load_sidecar(&entry.sidecar_json).map_err(|e| fail(None, e.to_string()))?;
    let id = Some(sidecar.subject_id.clone());
    let rec = load_recording(&entry.recording_csv, &entry.sidecar_json).map_err(|e| fail(id.clone(), e.to_string()))?;
    let findings = validate_recording(&rec, &cfg.validation);
    let label = match labels.get(rec.subject_id()) {
        Some((arm, _)) if *arm != sidecar.group => {
            return Err(fail(id, format!("sidecar group {} disagrees with cohort group {arm}", sidecar.group)));
        }
        Some((_, label)) => *label,
        None => ResponseLabel::Unlabeled,
    };
    let (_, row) = feature_row(&rec, sidecar.group, label, &cfg.features).map_err(|e| fail(id, e.to_string()))?;
    Ok((row, findings))
}

/// Builds the feature table from the manifest. Failing recordings are
/// listed in `feature_errors.json` and the rest are still processed.
pub fn run(cfg: &StudyConfig) -> Result<Outcome, CliError> {
    let config = cfg.prepare_output()?;
    let manifest_path = cfg.manifest_path();
    let manifest = Manifest::load(&manifest_path).context(|| format!("manifest {}", manifest_path.display()))?;
    let cohort = load_cohort_csv(&manifest.cohort_csv, cfg.responder.threshold, cfg.responder.timepoint)
        .context(|| format!("cohort {}", manifest.cohort_csv.display()))?;
    let labels: BTreeMap<String, (TrialArm, ResponseLabel)> = cohort
        .into_iter()
        .map(|r| (r.subject_id, (r.group, r.label)))
        .collect();

    let results: Vec<Result<Processed, RecordingError>> = manifest
        .recordings
        .par_iter()
        .map(|e| process(e, &labels, cfg))
        .collect();

    let mut table = FeatureTable::new(feature_columns());
    let mut errors = Vec::new();
    let mut findings = Vec::new();
    for r in results {
        match r {
            Ok((row, f)) => {
                if !f.is_empty() {
                    findings.push(RecordingFindings {
                        subject_id: row.subject_id.clone(),
                        session: row.session,
                        findings: f,
                    });
                }
                table.push(row).context(|| "feature table".to_string())?;
            }
            Err(e) => errors.push(e),
        }
    }
    table.sort();
    findings.sort_by(|a, b| (&a.subject_id, a.session).cmp(&(&b.subject_id, b.session)));

    let table_path = cfg.feature_table_path();
    if let Some(parent) = table_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    table.save(&table_path).context(|| format!("writing {}", table_path.display()))?;
    let errors_path = cfg.output_dir.join(ERRORS);
    write_json(&errors_path, &errors)?;
    let findings_path = cfg.output_dir.join(FINDINGS);
    write_json(&findings_path, &findings)?;
    Ok(Outcome {
        outputs: vec![config, table_path, errors_path, findings_path],
        failures: errors.len(),
    })
}
