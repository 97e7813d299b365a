use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::svm::{self, SvmModel};
use super::{Class, Dataset, Hyperparams, ModelKind};
use crate::error::{Error, Result};

/// Learned state for each classifier kind. Inputs are standardised rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierParams {
    /// `w . x + b > 0` predicts Responder.
    Lda { weights: Vec<f64>, bias: f64 },
    Nmsc { responder_mean: Vec<f64>, non_responder_mean: Vec<f64> },
    Knn { k: usize, rows: Vec<Vec<f64>>, classes: Vec<Class> },
    /// Gaussian kernel densities; bandwidths from Silverman's rule per class.
    Parzen {
        responder_rows: Vec<Vec<f64>>,
        non_responder_rows: Vec<Vec<f64>>,
        responder_bandwidth: f64,
        non_responder_bandwidth: f64,
        responder_prior: f64,
    },
    Perceptron { weights: Vec<f64>, bias: f64, training_accuracy: f64, epochs: usize },
    Svm(SvmModel),
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ClassifierParams {
    pub fn predict(&self, x: &[f64]) -> Class {
        match self {
            ClassifierParams::Lda { weights, bias } | ClassifierParams::Perceptron { weights, bias, .. } => {
                Class::from_sign(dot(weights, x) + bias)
            }
            ClassifierParams::Nmsc {
                responder_mean,
                non_responder_mean,
            } => {
                if sq_dist(x, responder_mean) < sq_dist(x, non_responder_mean) {
                    Class::Responder
                } else {
                    Class::NonResponder
                }
            }
            ClassifierParams::Knn { k, rows, classes } => {
                let mut order: Vec<(f64, usize)> = rows.iter().enumerate().map(|(i, r)| (sq_dist(x, r), i)).collect();
                // distance ties resolved by lower row index
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let votes = order
                    .iter()
                    .take(*k)
                    .map(|&(_, i)| classes[i].sign())
                    .sum::<f64>();
                if votes == 0.0 {
                    classes[order[0].1]
                } else {
                    Class::from_sign(votes)
                }
            }
            ClassifierParams::Parzen {
                responder_rows,
                non_responder_rows,
                responder_bandwidth,
                non_responder_bandwidth,
                responder_prior,
            } => {
                let lp = log_density(x, responder_rows, *responder_bandwidth) + responder_prior.ln();
                let ln = log_density(x, non_responder_rows, *non_responder_bandwidth) + (1.0 - responder_prior).ln();
                Class::from_sign(lp - ln)
            }
            ClassifierParams::Svm(m) => Class::from_sign(m.decision(x)),
        }
    }
}

fn log_density(x: &[f64], rows: &[Vec<f64>], h: f64) -> f64 {
    let d = x.len() as f64;
    let terms: Vec<f64> = rows.iter().map(|r| -sq_dist(x, r) / (2.0 * h * h)).collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    m + s.ln() - (rows.len() as f64).ln() - d * (h * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

fn class_rows(data: &Dataset, class: Class) -> Vec<Vec<f64>> {
    data.rows
        .iter()
        .filter(|r| r.class == class)
        .map(|r| r.features.clone())
        .collect()
}

fn mean_of(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for r in rows {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= rows.len() as f64);
    m
}

/// Silverman's rule for a d-dimensional Gaussian kernel, using the mean
/// per-feature SD of the class. A class with no spread falls back to unit
/// scale (the standardised feature scale).
fn silverman(rows: &[Vec<f64>], d: usize) -> f64 {
    let n = rows.len() as f64;
    let mean = mean_of(rows, d);
    let mut sigma = 0.0;
    for j in 0..d {
        let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        sigma += var.sqrt();
    }
    sigma /= d as f64;
    if sigma <= 0.0 {
        sigma = 1.0;
    }
    let dd = d as f64;
    sigma * (4.0 / ((dd + 2.0) * n)).powf(1.0 / (dd + 4.0))
}

pub(super) fn fit(kind: ModelKind, data: &Dataset, hp: &Hyperparams, seed: u64) -> Result<(ClassifierParams, Vec<String>)> {
    let d = data.dim();
    let pos = class_rows(data, Class::Responder);
    let neg = class_rows(data, Class::NonResponder);
    let mut flags = Vec::new();
    let params = match kind {
        ModelKind::Lda => fit_lda(data, &pos, &neg, hp)?,
        ModelKind::Nmsc => ClassifierParams::Nmsc {
            responder_mean: mean_of(&pos, d),
            non_responder_mean: mean_of(&neg, d),
        },
        ModelKind::Knn3 => ClassifierParams::Knn {
            k: hp.knn_k,
            rows: data.rows.iter().map(|r| r.features.clone()).collect(),
            classes: data.rows.iter().map(|r| r.class).collect(),
        },
        ModelKind::Parzen => ClassifierParams::Parzen {
            responder_bandwidth: silverman(&pos, d),
            non_responder_bandwidth: silverman(&neg, d),
            responder_prior: pos.len() as f64 / data.len() as f64,
            responder_rows: pos,
            non_responder_rows: neg,
        },
        ModelKind::Perceptron => fit_pocket_perceptron(data, hp, seed),
        ModelKind::SvmRbf => {
            let xs: Vec<Vec<f64>> = data.rows.iter().map(|r| r.features.clone()).collect();
            let ys: Vec<f64> = data.rows.iter().map(|r| r.class.sign()).collect();
            let sol = svm::solve_smo(&xs, &ys, hp.svm_c, hp.svm_gamma, hp.svm_tolerance, hp.svm_max_iter);
            if !sol.converged {
                flags.push(format!("svm: no convergence after {} iterations (gap {:.3e})", sol.iterations, sol.gap));
            }
            ClassifierParams::Svm(SvmModel::from_solution(&xs, &ys, &sol, hp.svm_gamma))
        }
    };
    Ok((params, flags))
}

fn fit_lda(data: &Dataset, pos: &[Vec<f64>], neg: &[Vec<f64>], hp: &Hyperparams) -> Result<ClassifierParams> {
    let d = data.dim();
    let mp = mean_of(pos, d);
    let mn = mean_of(neg, d);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (rows, mu) in [(pos, &mp), (neg, &mn)] {
        for r in rows {
            let c = DVector::from_iterator(d, r.iter().zip(mu.iter()).map(|(a, b)| a - b));
            cov += &c * c.transpose();
        }
    }
    let dof = (data.len() as f64 - 2.0).max(1.0);
    cov /= dof;
    let ridge = {
        let t = cov.trace() / d as f64;
        hp.lda_ridge * if t > 0.0 { t } else { 1.0 }
    };
    for i in 0..d {
        cov[(i, i)] += ridge;
    }
    let diff = DVector::from_iterator(d, mp.iter().zip(&mn).map(|(a, b)| a - b));
    let w = cov
        .cholesky()
        .ok_or(Error::DegenerateGeometry)?
        .solve(&diff);
    let mid: f64 = (0..d).map(|i| w[i] * 0.5 * (mp[i] + mn[i])).sum();
    let prior = (pos.len() as f64 / neg.len() as f64).ln();
    Ok(ClassifierParams::Lda {
        weights: w.iter().copied().collect(),
        bias: -mid + prior,
    })
}

fn fit_pocket_perceptron(data: &Dataset, hp: &Hyperparams, seed: u64) -> ClassifierParams {
    let d = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let accuracy = |w: &[f64], b: f64| {
        data.rows
            .iter()
            .filter(|r| Class::from_sign(dot(w, &r.features) + b) == r.class)
            .count() as f64
            / data.len() as f64
    };
    let mut best = (w.clone(), b, accuracy(&w, b));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epochs = 0;
    'outer: for _ in 0..hp.perceptron_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let r = &data.rows[i];
            let y = r.class.sign();
            if y * (dot(&w, &r.features) + b) <= 0.0 {
                for (wj, xj) in w.iter_mut().zip(&r.features) {
                    *wj += hp.perceptron_rate * y * xj;
                }
                b += hp.perceptron_rate * y;
                let acc = accuracy(&w, b);
                if acc > best.2 {
                    best = (w.clone(), b, acc);
                    if acc == 1.0 {
                        break 'outer;
                    }
                }
            }
        }
    }
    ClassifierParams::Perceptron {
        weights: best.0,
        bias: best.1,
        training_accuracy: best.2,
        epochs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{predict, train, Sample};
    use rand_distr::{Distribution, Normal};

    use Class::{NonResponder as N, Responder as R};

    fn ds(rows: &[(&[f64], Class)]) -> Dataset {
        Dataset::new(
            (0..rows[0].0.len()).map(|i| format!("f{i}")).collect(),
            rows.iter()
                .enumerate()
                .map(|(i, (f, c))| Sample {
                    features: f.to_vec(),
                    class: *c,
                    subject_id: format!("S{i}"),
                })
                .collect(),
        )
        .unwrap()
    }

    fn fitted(kind: ModelKind, d: &Dataset) -> ClassifierParams {
        fit(kind, d, &Hyperparams::default(), 1).unwrap().0
    }

    fn six_points() -> Dataset {
        ds(&[
            (&[0.0, 0.0], R),
            (&[1.0, 0.0], R),
            (&[0.0, 1.0], R),
            (&[3.0, 3.0], N),
            (&[4.0, 3.0], N),
            (&[3.0, 4.0], N),
        ])
    }

    #[test]
    fn knn3_hand_predictions() {
        let m = fitted(ModelKind::Knn3, &six_points());
        assert_eq!(m.predict(&[0.9, 0.9]), R);
        assert_eq!(m.predict(&[3.5, 3.5]), N);
        // (2,2): nearest (3,3) at d2=2, then four rows tied at d2=5; the two
        // lowest indices are responders, so the vote is 2:1 for Responder
        assert_eq!(m.predict(&[2.0, 2.0]), R);
        // (2.6,2.0): three nearest are (3,3) 1.16, (4,3) 2.96, (3,4) 4.16
        assert_eq!(m.predict(&[2.6, 2.0]), N);
    }

    #[test]
    fn nmsc_hand_predictions() {
        let m = fitted(ModelKind::Nmsc, &six_points());
        // means (1/3,1/3) and (10/3,10/3); the boundary is x+y = 11/3
        assert_eq!(m.predict(&[2.0, 2.0]), N);
        assert_eq!(m.predict(&[1.8, 1.8]), R);
        assert_eq!(m.predict(&[1.0 / 3.0, 1.0 / 3.0]), R);
        assert_eq!(m.predict(&[0.0, 3.6]), R);
        assert_eq!(m.predict(&[0.0, 3.7]), N);
    }

    #[test]
    fn nmsc_boundary_is_the_bisector() {
        let d = ds(&[(&[0.0, 0.0], R), (&[0.0, 0.0], R), (&[2.0, 2.0], N), (&[2.0, 2.0], N)]);
        let m = fitted(ModelKind::Nmsc, &d);
        for t in [-5.0, -1.0, 0.0, 0.5, 3.0] {
            // bisector: x + y = 2
            assert_eq!(m.predict(&[t, 2.0 - t - 0.01]), R);
            assert_eq!(m.predict(&[t, 2.0 - t + 0.01]), N);
        }
    }

    #[test]
    fn knn_duplicated_point_wins() {
        let d = ds(&[(&[1.0], R), (&[1.0], R), (&[1.0], R), (&[1.1], N), (&[0.9], N), (&[5.0], N)]);
        assert_eq!(fitted(ModelKind::Knn3, &d).predict(&[1.0]), R);
    }

    fn blobs(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        for i in 0..40 {
            let (c, class) = if i % 2 == 0 { (4.0, R) } else { (-4.0, N) };
            rows.push(Sample {
                features: vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng), noise.sample(&mut rng)],
                class,
                subject_id: format!("S{i}"),
            });
        }
        Dataset::new(vec!["a".into(), "b".into(), "c".into()], rows).unwrap()
    }

    #[test]
    fn every_kind_separates_blobs() {
        for seed in 0..3 {
            let d = blobs(seed);
            for kind in ModelKind::ALL {
                let m = train(kind, &d, &Hyperparams::default(), seed).unwrap();
                let correct = d.rows.iter().filter(|r| predict(&m, &r.features).unwrap() == r.class).count();
                assert_eq!(correct, d.len(), "{kind} seed {seed}");
            }
        }
    }

    #[test]
    fn xor_separates_svm_from_perceptron() {
        let d = ds(&[(&[1.0, 1.0], R), (&[-1.0, -1.0], R), (&[1.0, -1.0], N), (&[-1.0, 1.0], N)]);
        let svm = train(ModelKind::SvmRbf, &d, &Hyperparams::default(), 3).unwrap();
        assert!(svm.flags.is_empty());
        assert!(d.rows.iter().all(|r| predict(&svm, &r.features).unwrap() == r.class));
        for seed in 0..20 {
            let p = train(ModelKind::Perceptron, &d, &Hyperparams::default(), seed).unwrap();
            let correct = d.rows.iter().filter(|r| predict(&p, &r.features).unwrap() == r.class).count();
            assert!(correct <= 3);
            let ClassifierParams::Perceptron { training_accuracy, .. } = p.params else { unreachable!() };
            assert!(training_accuracy <= 0.75);
        }
    }

    #[test]
    fn nmsc_matches_lda_on_isotropic_classes() {
        // each class: centre +/- unit steps along both axes, so the pooled
        // covariance is a multiple of the identity and the priors are equal
        let mut rows: Vec<(Vec<f64>, Class)> = Vec::new();
        for (centre, class) in [([1.0, 0.5], R), ([-0.5, -1.0], N)] {
            for step in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
                rows.push((vec![centre[0] + step[0], centre[1] + step[1]], class));
            }
        }
        let refs: Vec<(&[f64], Class)> = rows.iter().map(|(f, c)| (f.as_slice(), *c)).collect();
        let d = ds(&refs);
        let lda = fitted(ModelKind::Lda, &d);
        let nmsc = fitted(ModelKind::Nmsc, &d);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = Normal::new(0.0, 2.0).unwrap();
        for _ in 0..500 {
            let x = [u.sample(&mut rng), u.sample(&mut rng)];
            assert_eq!(lda.predict(&x), nmsc.predict(&x));
        }
    }

    #[test]
    fn parzen_and_svm_reproduce_training_points() {
        let d = blobs(9);
        let (_, z) = crate::ml::standardize(&d).unwrap();
        for kind in [ModelKind::Parzen, ModelKind::SvmRbf] {
            let m = fitted(kind, &z);
            assert!(z.rows.iter().all(|r| m.predict(&r.features) == r.class));
        }
        if let ClassifierParams::Parzen { responder_bandwidth, .. } = fitted(ModelKind::Parzen, &z) {
            assert!(responder_bandwidth > 0.0);
        }
    }
}
