//! C-SVM with an RBF kernel, trained by SMO on the dual with second-order
//! working-set selection.
//!
//! Dual: minimise `0.5 a'Qa - e'a` subject to `0 <= a_i <= C`, `y'a = 0`,
//! where `Q_ij = y_i y_j K(x_i, x_j)`. Stops when the maximal KKT violation
//! `m(a) - M(a)` falls below the tolerance.

use serde::{Deserialize, Serialize};

const TAU: f64 = 1e-12;

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision offset: `f(x) = sum a_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final KKT gap `m(a) - M(a)`.
    pub gap: f64,
}

pub fn solve_smo(xs: &[Vec<f64>], ys: &[f64], c: f64, gamma: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let n = xs.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rbf(&xs[i], &xs[j], gamma)).collect())
        .collect();
    let q = |i: usize, j: usize| ys[i] * ys[j] * k[i][j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y < 0.0 && a < c) || (y > 0.0 && a > 0.0);

    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], ys[t]) && -ys[t] * grad[t] >= gmax {
                gmax = -ys[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], ys[t]) {
                gmin = gmin.min(-ys[t] * grad[t]);
            }
        }
        gap = gmax - gmin;
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        if gap < tol {
            converged = true;
            break;
        }

        // j: second-order selection over I_low
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], ys[t]) {
                continue;
            }
            let b = gmax + ys[t] * grad[t];
            if b > 0.0 {
                let mut a = k[i][i] + k[t][t] - 2.0 * k[i][t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if ys[i] != ys[j] {
            let mut quad = k[i][i] + k[j][j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[i][i] + k[j][j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // offset from free vectors, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };

    SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
        gap,
    }
}

/// Support vectors with coefficients `a_i y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn from_solution(xs: &[Vec<f64>], ys: &[f64], sol: &SmoSolution, gamma: f64) -> Self {
        let (mut support_vectors, mut coef) = (Vec::new(), Vec::new());
        for ((x, y), a) in xs.iter().zip(ys).zip(&sol.alpha) {
            if *a > 0.0 {
                support_vectors.push(x.clone());
                coef.push(a * y);
            }
        }
        Self {
            support_vectors,
            coef,
            rho: sol.rho,
            gamma,
            iterations: sol.iterations,
            converged: sol.converged,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * rbf(sv, x, self.gamma))
            .sum::<f64>()
            - self.rho
    }
}
