//! Response prediction from baseline EEG features.
//!
//! Training always runs `oversample -> standardize -> fit` on the training
//! rows of a fold; nothing computed from test rows reaches the model.

mod classifiers;
mod cv;
mod metrics;
mod svm;

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clinical::ResponseLabel;
use crate::error::{Error, Result};
use crate::signal::{Session, TrialArm};
use crate::table::FeatureTable;

pub use classifiers::ClassifierParams;
pub use cv::{loso_cv, stratified_folds, three_fold_cv, EvalReport, FoldResult, Scheme};
pub use metrics::{compute_metrics, Confusion, MetricSummary, Metrics, SummaryStat};
pub use svm::{SmoSolution, SvmModel};

/// Binary target; `Responder` is the positive class for every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Responder,
    NonResponder,
}

impl Class {
    pub fn sign(self) -> f64 {
        match self {
            Class::Responder => 1.0,
            Class::NonResponder => -1.0,
        }
    }

    pub fn from_sign(v: f64) -> Class {
        if v > 0.0 {
            Class::Responder
        } else {
            Class::NonResponder
        }
    }

    pub fn from_label(label: ResponseLabel) -> Option<Class> {
        match label {
            ResponseLabel::Responder => Some(Class::Responder),
            ResponseLabel::NonResponder => Some(Class::NonResponder),
            ResponseLabel::Unlabeled => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub class: Class,
    pub subject_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub names: Vec<String>,
    pub rows: Vec<Sample>,
}

impl Dataset {
    pub fn new(names: Vec<String>, rows: Vec<Sample>) -> Result<Self> {
        for r in &rows {
            if r.features.len() != names.len() {
                return Err(Error::DimensionMismatch {
                    expected: names.len(),
                    found: r.features.len(),
                });
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteObservation);
            }
        }
        Ok(Self { names, rows })
    }

    /// Labelled rows of one session restricted to `arms`, with the named columns.
    pub fn from_table(table: &FeatureTable, session: Session, arms: &[TrialArm], names: &[String]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| table.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let rows = table
            .rows
            .iter()
            .filter(|r| r.session == session && arms.contains(&r.group))
            .filter_map(|r| {
                Class::from_label(r.label).map(|class| Sample {
                    features: cols.iter().map(|&c| r.values[c]).collect(),
                    class,
                    subject_id: r.subject_id.clone(),
                })
            })
            .collect();
        Dataset::new(names.to_vec(), rows)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, class: Class) -> usize {
        self.rows.iter().filter(|r| r.class == class).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// SHA-256 over names, features (little-endian bits), classes and subject ids.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for n in &self.names {
            h.update(n.as_bytes());
            h.update([0u8]);
        }
        for r in &self.rows {
            for v in &r.features {
                h.update(v.to_le_bytes());
            }
            h.update([r.class as u8]);
            h.update(r.subject_id.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Per-feature z-score transform fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Features whose training SD was zero; they map to 0.
    pub zero_variance: Vec<bool>,
}

impl Standardizer {
    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, v)| if self.zero_variance[j] { 0.0 } else { (v - self.mean[j]) / self.sd[j] })
            .collect())
    }
}

/// Fits a z-score transform (sample SD) and applies it to `train`.
pub fn standardize(train: &Dataset) -> Result<(Standardizer, Dataset)> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = train.len() as f64;
    let d = train.dim();
    let mut mean = vec![0.0; d];
    for r in &train.rows {
        for (m, v) in mean.iter_mut().zip(&r.features) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut sd = vec![0.0; d];
    for r in &train.rows {
        for j in 0..d {
            sd[j] += (r.features[j] - mean[j]).powi(2);
        }
    }
    let denom = (n - 1.0).max(1.0);
    sd.iter_mut().for_each(|s| *s = (*s / denom).sqrt());
    let zero_variance: Vec<bool> = sd.iter().map(|&s| s <= f64::EPSILON * 16.0).collect();
    let st = Standardizer {
        mean,
        sd,
        zero_variance,
    };
    let rows = train
        .rows
        .iter()
        .map(|r| {
            Ok(Sample {
                features: st.transform(&r.features)?,
                class: r.class,
                subject_id: r.subject_id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        st,
        Dataset {
            names: train.names.clone(),
            rows,
        },
    ))
}

/// Appends minority-class rows drawn with replacement until the classes are
/// the same size. Original rows keep their positions.
pub fn oversample_minority(train: &Dataset, seed: u64) -> Result<Dataset> {
    let pos = train.count(Class::Responder);
    let neg = train.count(Class::NonResponder);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let (minority, deficit) = if pos < neg {
        (Class::Responder, neg - pos)
    } else {
        (Class::NonResponder, pos - neg)
    };
    let mut out = train.clone();
    if deficit == 0 {
        return Ok(out);
    }
    let pool: Vec<&Sample> = train.rows.iter().filter(|r| r.class == minority).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..deficit {
        out.rows.push((*pool.choose(&mut rng).expect("minority class non-empty")).clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lda")]
    Lda,
    #[serde(rename = "nmsc")]
    Nmsc,
    #[serde(rename = "knn3")]
    Knn3,
    #[serde(rename = "parzen")]
    Parzen,
    #[serde(rename = "perceptron")]
    Perceptron,
    #[serde(rename = "svm_rbf")]
    SvmRbf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Lda,
        ModelKind::Nmsc,
        ModelKind::Knn3,
        ModelKind::Parzen,
        ModelKind::Perceptron,
        ModelKind::SvmRbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lda => "LDA",
            ModelKind::Nmsc => "NMSC",
            ModelKind::Knn3 => "3-NN",
            ModelKind::Parzen => "PARZEN",
            ModelKind::Perceptron => "PERLC",
            ModelKind::SvmRbf => "SVMRBF",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(ModelKind::Lda),
            "nmsc" => Ok(ModelKind::Nmsc),
            "knn3" | "3-nn" | "knn" => Ok(ModelKind::Knn3),
            "parzen" => Ok(ModelKind::Parzen),
            "perceptron" | "perlc" => Ok(ModelKind::Perceptron),
            "svm_rbf" | "svmrbf" | "svm" => Ok(ModelKind::SvmRbf),
            other => Err(Error::UnknownFeature(format!("classifier {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub svm_c: f64,
    pub svm_gamma: f64,
    pub svm_tolerance: f64,
    pub svm_max_iter: usize,
    pub knn_k: usize,
    /// LDA ridge as a fraction of the mean covariance diagonal.
    pub lda_ridge: f64,
    pub perceptron_rate: f64,
    pub perceptron_epochs: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            svm_c: 10.0,
            svm_gamma: 1.0,
            svm_tolerance: 1e-3,
            svm_max_iter: 100_000,
            knn_k: 3,
            lda_ridge: 1e-6,
            perceptron_rate: 1.0,
            perceptron_epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub data_hash: String,
    pub seed: u64,
    pub rows: usize,
}

/// A fitted classifier with its standardisation. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    pub standardization: Standardizer,
    pub params: ClassifierParams,
    pub fingerprint: Fingerprint,
    /// Non-fatal training notes, e.g. solver non-convergence.
    pub flags: Vec<String>,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Fits the classifier on already standardised rows.
pub fn fit_classifier(kind: ModelKind, data: &Dataset, hp: &Hyperparams, seed: u64) -> Result<(ClassifierParams, Vec<String>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.count(Class::Responder) == 0 || data.count(Class::NonResponder) == 0 {
        return Err(Error::SingleClass);
    }
    let first = &data.rows[0].features;
    if data.rows.iter().all(|r| &r.features == first) {
        return Err(Error::DegenerateGeometry);
    }
    classifiers::fit(kind, data, hp, seed)
}

/// Full training pipeline on raw rows: oversample, standardise, fit.
pub fn train(kind: ModelKind, train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    let balanced = oversample_minority(train, seed)?;
    let (standardization, scaled) = standardize(&balanced)?;
    let (params, flags) = fit_classifier(kind, &scaled, hp, seed)?;
    Ok(TrainedModel {
        kind,
        hyperparams: *hp,
        feature_names: train.names.clone(),
        standardization,
        params,
        fingerprint: Fingerprint {
            data_hash: train.fingerprint(),
            seed,
            rows: train.len(),
        },
        flags,
    })
}

pub fn predict(model: &TrainedModel, row: &[f64]) -> Result<Class> {
    let z = model.standardization.transform(row)?;
    Ok(model.params.predict(&z))
}

/// Deterministic per-task seed derived from a base seed and indices (splitmix64).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
