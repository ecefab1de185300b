//! Soft-margin kernel SVM solved in the dual by SMO with second-order
//! working-set selection.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 50.0;
/// Maximal KKT violation at which SMO stops.
pub const KKT_TOL: f64 = 1e-9;
const TAU: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-8;
/// Eigenvalues below this are clipped to zero.
pub const PSD_CLIP_TOL: f64 = -1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub training_labels: Vec<i8>,
    /// Caller-side indices of the training points, if known.
    #[serde(default)]
    pub training_indices: Vec<usize>,
    pub lambda: f64,
    pub iterations: usize,
}

impl SvmModel {
    /// Σ α_l y_l K(x_l, x) + b
    pub fn decision_value(&self, k_row: &[f64]) -> Result<f64> {
        if k_row.len() != self.alphas.len() {
            return Err(Error::Shape(format!(
                "kernel row has {} entries, model has {} training points",
                k_row.len(),
                self.alphas.len()
            )));
        }
        Ok(self
            .alphas
            .iter()
            .zip(&self.training_labels)
            .zip(k_row)
            .map(|((a, &y), k)| a * y as f64 * k)
            .sum::<f64>()
            + self.bias)
    }

    /// Labels summing α_l y_l; zero for an exact solution.
    pub fn equality_residual(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.training_labels)
            .map(|(a, &y)| a * y as f64)
            .sum()
    }
}

/// Dual objective Σα − ½ ΣΣ α_l y_l α_l' y_l' K_ll'.
pub fn dual_objective(alphas: &[f64], labels: &[i8], k: &DMatrix<f64>) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] as f64 * labels[j] as f64 * k[(i, j)];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Sets negative eigenvalues to zero. Returns the input untouched, and
/// `false`, when it is already PSD.
pub fn clip_psd(k: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let sym = (k + k.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let lowest = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lowest >= PSD_CLIP_TOL {
        return (sym, false);
    }
    log::warn!(
        "kernel is indefinite (lowest eigenvalue {lowest:e}); clipping negative eigenvalues"
    );
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&clipped) * v.transpose(), true)
}

fn check_inputs(k: &DMatrix<f64>, labels: &[i8]) -> Result<()> {
    let n = labels.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::Shape(format!(
            "kernel is {}x{} for {n} labels",
            k.nrows(),
            k.ncols()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidInput(format!("label {bad} is not ±1")));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::DegenerateLabels);
    }
    for i in 0..n {
        for j in 0..i {
            if (k[(i, j)] - k[(j, i)]).abs() > SYMMETRY_TOL || !k[(i, j)].is_finite() {
                return Err(Error::Kernel(format!("kernel not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Trains on the training-set kernel `k` with labels ±1 and box bound λ.
pub fn svm_train(k: &DMatrix<f64>, labels: &[i8], lambda: f64) -> Result<SvmModel> {
    check_inputs(k, labels)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let (k, _) = clip_psd(k);
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut alpha = vec![0.0; n];
    // gradient of ½ αᵀQα − Σα with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let c = lambda;
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let max_iter = (100 * n).max(10_000_000);
    let mut iterations = 0;

    while iterations < max_iter {
        // i: most violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 {
                !upper(alpha[t])
            } else {
                !lower(alpha[t])
            };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };
        // j: second-order selection in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            let in_low = if y[t] > 0.0 {
                !lower(alpha[t])
            } else {
                !upper(alpha[t])
            };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let mut a = k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -diff * diff / a;
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < KKT_TOL {
            break;
        }
        let Some(j) = j_sel else { break };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)];
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
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
            grad[t] += y[t] * (y[i] * k[(t, i)] * di + y[j] * k[(t, j)] * dj);
        }
    }

    // bias from free support vectors, else the midpoint of the feasible range
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (ub + lb)
    };

    Ok(SvmModel {
        alphas: alpha,
        bias: -rho,
        training_labels: labels.to_vec(),
        training_indices: Vec::new(),
        lambda,
        iterations,
    })
}

/// sign(decision value), with sign(0) = +1.
pub fn svm_predict(model: &SvmModel, k_row: &[f64]) -> Result<i8> {
    let v = model.decision_value(k_row)?;
    Ok(if v >= 0.0 { 1 } else { -1 })
}
