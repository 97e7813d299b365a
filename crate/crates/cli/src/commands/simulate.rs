use qeeg::synth::write_cohort;

use crate::config::StudyConfig;
use crate::error::{CliError, Context};
use crate::Outcome;

/// Writes a synthetic cohort (recordings, sidecars, cohort CSV, manifest)
/// into the output directory.
pub fn run(cfg: &StudyConfig) -> Result<Outcome, CliError> {
    cfg.simulate
        .validate()
        .map_err(|e| CliError::Config(format!("simulate: {e}")))?;
    let config = cfg.prepare_output()?;
    let manifest = write_cohort(&cfg.simulate, &cfg.output_dir).context(|| "simulate".to_string())?;
    let mut outputs = vec![config, cfg.output_dir.join("manifest.json"), cfg.output_dir.join(&manifest.cohort_csv)];
    outputs.extend(manifest.recordings.iter().flat_map(|e| {
        [cfg.output_dir.join(&e.recording_csv), cfg.output_dir.join(&e.sidecar_json)]
    }));
    Ok(Outcome { outputs, failures: 0 })
}
