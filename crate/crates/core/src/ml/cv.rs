use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, Confusion, MetricSummary, Metrics};
use super::{derive_seed, predict, train, Class, Dataset, Hyperparams, ModelKind, TrainedModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ThreeFold,
    LeaveOneSubjectOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub test_rows: Vec<usize>,
    pub confusion: Confusion,
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub repeats: usize,
    pub data_hash: String,
    pub per_fold: Vec<FoldResult>,
    /// Mean and SD across folds (and repeats).
    pub mean_sd: MetricSummary,
    /// Metrics of the confusion matrix summed over every fold.
    pub pooled: Metrics,
}

/// Stratified `k`-way split. Each class is shuffled then dealt round-robin,
/// the fold pointer carrying over from one class to the next so fold sizes
/// differ by at most one. Indices within a fold are ascending.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    for class in [Class::Responder, Class::NonResponder] {
        let count = data.count(class);
        if count < k {
            return Err(Error::ClassTooSmall {
                class: format!("{class:?}"),
                count,
                required: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [Class::Responder, Class::NonResponder] {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.rows[i].class == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

pub(crate) fn run_fold(
    data: &Dataset,
    test: &[usize],
    kind: ModelKind,
    hp: &Hyperparams,
    seed: u64,
) -> Result<(TrainedModel, Confusion)> {
    let held: BTreeSet<usize> = test.iter().copied().collect();
    let train_idx: Vec<usize> = (0..data.len()).filter(|i| !held.contains(i)).collect();
    let model = train(kind, &data.subset(&train_idx), hp, seed)?;
    let mut confusion = Confusion::default();
    for &i in test {
        confusion.record(data.rows[i].class, predict(&model, &data.rows[i].features)?);
    }
    Ok((model, confusion))
}

fn evaluate(
    data: &Dataset,
    kind: ModelKind,
    hp: &Hyperparams,
    seed: u64,
    scheme: Scheme,
    repeats: usize,
    splits: Vec<(usize, usize, Vec<usize>)>,
) -> Result<EvalReport> {
    let per_fold = splits
        .into_par_iter()
        .map(|(repeat, fold, test)| {
            let fold_seed = derive_seed(seed, &[repeat as u64, fold as u64]);
            let (model, confusion) = run_fold(data, &test, kind, hp, fold_seed)?;
            Ok(FoldResult {
                repeat,
                fold,
                metrics: compute_metrics(&confusion)?,
                test_rows: test,
                confusion,
                flags: model.flags,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics: Vec<Metrics> = per_fold.iter().map(|f| f.metrics).collect();
    let pooled = per_fold
        .iter()
        .fold(Confusion::default(), |acc, f| acc.merge(&f.confusion));
    Ok(EvalReport {
        scheme,
        kind,
        feature_names: data.names.clone(),
        seed,
        repeats,
        data_hash: data.fingerprint(),
        mean_sd: MetricSummary::of(&metrics),
        pooled: compute_metrics(&pooled)?,
        per_fold,
    })
}

/// Repeated stratified 3-fold cross-validation.
pub fn three_fold_cv(data: &Dataset, kind: ModelKind, hp: &Hyperparams, seed: u64, repeats: usize) -> Result<EvalReport> {
    let mut splits = Vec::new();
    for r in 0..repeats {
        let folds = stratified_folds(data, 3, derive_seed(seed, &[u64::MAX, r as u64]))?;
        splits.extend(folds.into_iter().enumerate().map(|(f, test)| (r, f, test)));
    }
    evaluate(data, kind, hp, seed, Scheme::ThreeFold, repeats, splits)
}

/// One fold per subject id (ascending); all of a subject's rows are held out together.
pub fn loso_cv(data: &Dataset, kind: ModelKind, hp: &Hyperparams, seed: u64) -> Result<EvalReport> {
    let subjects: BTreeSet<&str> = data.rows.iter().map(|r| r.subject_id.as_str()).collect();
    if subjects.len() < 2 {
        return Err(Error::SingleSubject);
    }
    let splits = subjects
        .iter()
        .enumerate()
        .map(|(f, s)| {
            let test: Vec<usize> = (0..data.len()).filter(|&i| data.rows[i].subject_id == *s).collect();
            (0, f, test)
        })
        .collect();
    evaluate(data, kind, hp, seed, Scheme::LeaveOneSubjectOut, 1, splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{oversample_minority, standardize, Sample};
    use rand_distr::{Distribution, Normal};

    fn blobs(n_pos: usize, n_neg: usize, shift: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        for i in 0..n_pos + n_neg {
            let (class, c) = if i < n_pos { (Class::Responder, shift) } else { (Class::NonResponder, -shift) };
            rows.push(Sample {
                features: vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)],
                class,
                subject_id: format!("S{i:03}"),
            });
        }
        Dataset::new(vec!["a".into(), "b".into()], rows).unwrap()
    }

    #[test]
    fn fold_sizes_for_37_rows() {
        let d = blobs(13, 24, 1.0, 1);
        let folds = stratified_folds(&d, 3, 7).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![12, 12, 13]);
        let all: BTreeSet<usize> = folds.iter().flatten().copied().collect();
        assert_eq!(all.len(), 37);
        for f in &folds {
            let pos = f.iter().filter(|&&i| d.rows[i].class == Class::Responder).count() as f64;
            // stratified ideal 13/3 responders per fold
            assert!((pos - 13.0 / 3.0).abs() <= 1.0);
        }
    }

    #[test]
    fn too_few_rows_per_class() {
        let d = blobs(2, 10, 1.0, 1);
        assert!(matches!(three_fold_cv(&d, ModelKind::Nmsc, &Hyperparams::default(), 1, 1), Err(Error::ClassTooSmall { .. })));
        let one = Dataset::new(
            vec!["a".into()],
            vec![
                Sample { features: vec![0.0], class: Class::Responder, subject_id: "X".into() },
                Sample { features: vec![1.0], class: Class::NonResponder, subject_id: "X".into() },
            ],
        )
        .unwrap();
        assert!(matches!(loso_cv(&one, ModelKind::Nmsc, &Hyperparams::default(), 1), Err(Error::SingleSubject)));
    }

    #[test]
    fn separable_cohort_is_perfect() {
        let d = blobs(12, 12, 8.0, 3);
        for kind in ModelKind::ALL {
            let rep = three_fold_cv(&d, kind, &Hyperparams::default(), 5, 2).unwrap();
            assert_eq!(rep.per_fold.len(), 6);
            assert!(rep.per_fold.iter().all(|f| f.metrics.accuracy == 100.0), "{kind}");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let d = blobs(9, 14, 0.7, 4);
        let a = serde_json::to_string(&three_fold_cv(&d, ModelKind::SvmRbf, &Hyperparams::default(), 11, 3).unwrap()).unwrap();
        let b = serde_json::to_string(&three_fold_cv(&d, ModelKind::SvmRbf, &Hyperparams::default(), 11, 3).unwrap()).unwrap();
        assert_eq!(a, b);
        let a = loso_cv(&d, ModelKind::Perceptron, &Hyperparams::default(), 2).unwrap();
        let b = loso_cv(&d, ModelKind::Perceptron, &Hyperparams::default(), 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn loso_holds_out_whole_subjects() {
        let mut d = blobs(9, 9, 1.5, 6);
        // two rows per subject
        for (i, r) in d.rows.iter_mut().enumerate() {
            r.subject_id = format!("P{:02}", i / 2);
        }
        let rep = loso_cv(&d, ModelKind::Knn3, &Hyperparams::default(), 1).unwrap();
        assert_eq!(rep.per_fold.len(), 9);
        for f in &rep.per_fold {
            let ids: BTreeSet<&str> = f.test_rows.iter().map(|&i| d.rows[i].subject_id.as_str()).collect();
            assert_eq!(ids.len(), 1);
            let id = *ids.iter().next().unwrap();
            let in_train = (0..d.len()).filter(|i| !f.test_rows.contains(i)).any(|i| d.rows[i].subject_id == id);
            assert!(!in_train);
        }
        assert_eq!(rep.pooled.accuracy, {
            let c = rep.per_fold.iter().map(|f| f.confusion.tp + f.confusion.tn).sum::<usize>();
            100.0 * c as f64 / 18.0
        });
    }

    #[test]
    fn test_rows_never_reach_training() {
        let d = blobs(8, 13, 1.0, 8);
        let folds = stratified_folds(&d, 3, 2).unwrap();
        let test = &folds[0];
        let (model, _) = run_fold(&d, test, ModelKind::Lda, &Hyperparams::default(), 9).unwrap();

        let train_idx: Vec<usize> = (0..d.len()).filter(|i| !test.contains(i)).collect();
        let balanced = oversample_minority(&d.subset(&train_idx), 9).unwrap();
        let (expected, _) = standardize(&balanced).unwrap();
        assert_eq!(model.standardization, expected);

        // corrupting test rows leaves the fitted model untouched
        let mut poisoned = d.clone();
        for &i in test {
            poisoned.rows[i].features = vec![1e6, -1e6];
        }
        let (again, _) = run_fold(&poisoned, test, ModelKind::Lda, &Hyperparams::default(), 9).unwrap();
        assert_eq!(again.standardization, model.standardization);
        assert_eq!(again.params, model.params);
    }

    #[test]
    fn metrics_stay_in_range() {
        let d = blobs(7, 11, 0.3, 10);
        let rep = three_fold_cv(&d, ModelKind::Parzen, &Hyperparams::default(), 3, 4).unwrap();
        for f in &rep.per_fold {
            let m = f.metrics;
            for v in [Some(m.accuracy), m.sensitivity, m.specificity, m.precision, m.f_measure].into_iter().flatten() {
                assert!((0.0..=100.0).contains(&v));
            }
        }
        let covered: usize = rep.per_fold.iter().filter(|f| f.repeat == 0).map(|f| f.test_rows.len()).sum();
        assert_eq!(covered, d.len());
    }
}
