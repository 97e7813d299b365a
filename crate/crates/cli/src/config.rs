//! Study configuration. Every key is optional; missing keys take the
//! defaults below. The resolved config is written to each output directory
//! as `effective_config.json` and can be fed back with `--config`.

use std::fs;
use std::path::{Path, PathBuf};

use qeeg::clinical::{Timepoint, DEFAULT_THRESHOLD};
use qeeg::features::FeatureSpec;
use qeeg::ml::{Hyperparams, ModelKind};
use qeeg::pipeline::FeatureConfig;
use qeeg::signal::{TrialArm, ValidationConfig};
use qeeg::stats::{CompareOptions, Comparison};
use qeeg::synth::CohortSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const EFFECTIVE_CONFIG: &str = "effective_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Defaults to `<output_dir>/manifest.json`.
    pub manifest: Option<PathBuf>,
    /// Defaults to `<output_dir>/features.csv`.
    pub feature_table: Option<PathBuf>,
    /// Cohort CSV for `report`; defaults to the one named in the manifest.
    pub cohort_csv: Option<PathBuf>,
    pub responder: ResponderConfig,
    pub validation: ValidationConfig,
    pub features: FeatureConfig,
    pub stats: StatsConfig,
    pub predict: PredictConfig,
    /// Cohort generated by `simulate`; its `seed` is replaced by the top-level seed.
    pub simulate: CohortSpec,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 0,
            manifest: None,
            feature_table: None,
            cohort_csv: None,
            responder: ResponderConfig::default(),
            validation: ValidationConfig::default(),
            features: FeatureConfig::default(),
            stats: StatsConfig::default(),
            predict: PredictConfig::default(),
            simulate: CohortSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponderConfig {
    /// Fractional HDRS reduction that counts as response (inclusive).
    pub threshold: f64,
    pub timepoint: Timepoint,
}

impl Default for ResponderConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            timepoint: Timepoint::Min240,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    /// Explicit comparison list; absent means the standard baseline and
    /// baseline-to-post families.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<Vec<Comparison>>,
    pub options: CompareOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub classifiers: Vec<ModelKind>,
    pub feature_sets: Vec<FeatureSpec>,
    /// Arms pooled for the 3-fold grid.
    pub arms: Vec<TrialArm>,
    pub repeats: usize,
    /// Arms evaluated separately with leave-one-subject-out.
    pub loso_arms: Vec<TrialArm>,
    pub hyperparams: Hyperparams,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            classifiers: ModelKind::ALL.to_vec(),
            feature_sets: vec![FeatureSpec::Theta, FeatureSpec::LowAlpha, FeatureSpec::ThetaLowAlpha],
            arms: vec![TrialArm::AKet05, TrialArm::BKet02],
            repeats: 10,
            loso_arms: vec![TrialArm::AKet05, TrialArm::BKet02],
            hyperparams: Hyperparams::default(),
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies overrides, fills derived paths and checks value ranges.
    pub fn resolve(mut self, overrides: &Overrides) -> Result<Self, CliError> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.output_dir {
            self.output_dir = out.clone();
        }
        self.simulate.seed = self.seed;
        if self.manifest.is_none() {
            self.manifest = Some(self.output_dir.join("manifest.json"));
        }
        if self.feature_table.is_none() {
            self.feature_table = Some(self.output_dir.join("features.csv"));
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.responder.threshold > 0.0 && self.responder.threshold < 1.0) {
            return bad("responder.threshold must lie in (0, 1)");
        }
        for a in [self.stats.options.primary_alpha, self.stats.options.secondary_alpha] {
            if !(a > 0.0 && a < 1.0) {
                return bad("stats alpha levels must lie in (0, 1)");
            }
        }
        let p = &self.predict;
        if p.classifiers.is_empty() || p.feature_sets.is_empty() {
            return bad("predict.classifiers and predict.feature_sets must be non-empty");
        }
        if p.repeats == 0 {
            return bad("predict.repeats must be >= 1");
        }
        if p.arms.is_empty() {
            return bad("predict.arms must be non-empty");
        }
        if p.hyperparams.knn_k == 0 || p.hyperparams.svm_c <= 0.0 || p.hyperparams.svm_gamma <= 0.0 {
            return bad("predict.hyperparams: knn_k, svm_c and svm_gamma must be positive");
        }
        self.features
            .welch
            .params(512.0)
            .validate()
            .map_err(|e| CliError::Config(format!("features.welch: {e}")))?;
        Ok(())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| self.output_dir.join("manifest.json"))
    }

    pub fn feature_table_path(&self) -> PathBuf {
        self.feature_table.clone().unwrap_or_else(|| self.output_dir.join("features.csv"))
    }

    /// Creates the output directory and writes the effective config into it.
    pub fn prepare_output(&self) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.output_dir).map_err(|e| CliError::io(&self.output_dir, e))?;
        let path = self.output_dir.join(EFFECTIVE_CONFIG);
        write_json(&path, self)?;
        Ok(path)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
