//! Programmable Mach-Zehnder meshes.
//!
//! A cell acting on modes `(top, top + 1)` has the transfer matrix
//!
//! ```text
//! T(θ, φ) = [[e^{iφ} cos θ, −sin θ],
//!            [e^{iφ} sin θ,  cos θ]]
//! ```
//!
//! so θ = 0 is the bar state and θ = π/2 the cross state. Light crosses the
//! layers in increasing index; the output phase screen comes last.

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, unitarity_error, ComplexMatrix};

/// Tolerance on ‖U†U − I‖ accepted by [`clements_decompose`].
pub const DECOMPOSE_UNITARY_TOL: f64 = 1e-8;

pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MziCell {
    pub layer: usize,
    pub top_mode: usize,
    pub theta: f64,
    pub phi: f64,
}

impl MziCell {
    pub fn new(layer: usize, top_mode: usize, theta: f64, phi: f64) -> Self {
        MziCell {
            layer,
            top_mode,
            theta: reduce_angle(theta),
            phi: reduce_angle(phi),
        }
    }

    pub fn set_angles(&mut self, theta: f64, phi: f64) {
        self.theta = reduce_angle(theta);
        self.phi = reduce_angle(phi);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshProgram {
    pub m: usize,
    pub cells: Vec<MziCell>,
    pub output_phases: Vec<f64>,
}

impl MeshProgram {
    pub fn empty(m: usize) -> Self {
        MeshProgram {
            m,
            cells: Vec::new(),
            output_phases: vec![0.0; m],
        }
    }

    /// Universal rectangular layout: `m` layers, layer `l` holding cells on
    /// the pairs `(t, t + 1)` with `t ≡ l (mod 2)`. All angles set to
    /// `(theta, phi)`.
    pub fn rectangular(m: usize, theta: f64, phi: f64) -> Self {
        let mut cells = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for layer in 0..m {
            let mut top = layer % 2;
            while top + 1 < m {
                cells.push(MziCell::new(layer, top, theta, phi));
                top += 2;
            }
        }
        MeshProgram {
            m,
            cells,
            output_phases: vec![0.0; m],
        }
    }

    pub fn depth(&self) -> usize {
        self.cells.iter().map(|c| c.layer + 1).max().unwrap_or(0)
    }

    /// Checks mode ranges, phase-screen length and that cells sharing a
    /// layer act on disjoint mode pairs.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Layout("mesh needs at least one mode".into()));
        }
        if self.output_phases.len() != self.m {
            return Err(Error::Layout(format!(
                "output_phases has {} entries, expected {}",
                self.output_phases.len(),
                self.m
            )));
        }
        let mut used: HashSet<(usize, usize)> = HashSet::new();
        for (idx, cell) in self.cells.iter().enumerate() {
            if cell.top_mode + 2 > self.m {
                return Err(Error::Layout(format!(
                    "cell {idx} acts on modes ({}, {}) outside an {}-mode mesh",
                    cell.top_mode,
                    cell.top_mode + 1,
                    self.m
                )));
            }
            if !cell.theta.is_finite() || !cell.phi.is_finite() {
                return Err(Error::Layout(format!("cell {idx} has a non-finite angle")));
            }
            for mode in [cell.top_mode, cell.top_mode + 1] {
                if !used.insert((cell.layer, mode)) {
                    return Err(Error::Layout(format!(
                        "cell {idx} overlaps another cell on mode {mode} in layer {}",
                        cell.layer
                    )));
                }
            }
        }
        Ok(())
    }

    /// Cell indices in light-traversal order (stable by layer).
    pub fn traversal_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.cells.len()).collect();
        order.sort_by_key(|&i| self.cells[i].layer);
        order
    }
}

pub fn mzi_transfer(theta: f64, phi: f64) -> Result<ComplexMatrix> {
    if theta.is_nan() || phi.is_nan() {
        return Err(Error::InvalidInput("MZI angle is NaN".into()));
    }
    let (s, co) = theta.sin_cos();
    let e = c(0.0, phi).exp();
    Ok(ComplexMatrix::from_row_slice(
        2,
        2,
        &[e * co, c(-s, 0.0), e * s, c(co, 0.0)],
    ))
}

/// Left-multiplies rows `top`, `top + 1` of `u` by `T(θ, φ)`.
fn apply_cell_left(u: &mut ComplexMatrix, top: usize, theta: f64, phi: f64) {
    let (s, co) = theta.sin_cos();
    let e = c(0.0, phi).exp();
    for col in 0..u.ncols() {
        let a = u[(top, col)];
        let b = u[(top + 1, col)];
        u[(top, col)] = e * co * a - b * s;
        u[(top + 1, col)] = e * s * a + b * co;
    }
}

/// Right-multiplies columns `top`, `top + 1` of `u` by `T(θ, φ)†`.
fn apply_cell_inverse_right(u: &mut ComplexMatrix, top: usize, theta: f64, phi: f64) {
    let (s, co) = theta.sin_cos();
    let e_conj = c(0.0, -phi).exp();
    for row in 0..u.nrows() {
        let a = u[(row, top)];
        let b = u[(row, top + 1)];
        // T† = [[e^{-iφ} c, e^{-iφ} s], [-s, c]]
        u[(row, top)] = a * e_conj * co - b * s;
        u[(row, top + 1)] = a * e_conj * s + b * co;
    }
}

pub fn mesh_to_unitary(mesh: &MeshProgram) -> Result<ComplexMatrix> {
    mesh.validate()?;
    let mut u = ComplexMatrix::identity(mesh.m, mesh.m);
    for idx in mesh.traversal_order() {
        let cell = &mesh.cells[idx];
        apply_cell_left(&mut u, cell.top_mode, cell.theta, cell.phi);
    }
    for (row, &phase) in mesh.output_phases.iter().enumerate() {
        let p = c(0.0, phase).exp();
        for col in 0..mesh.m {
            u[(row, col)] *= p;
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy)]
struct Nulling {
    top: usize,
    theta: f64,
    phi: f64,
}

/// Rectangular (Clements) decomposition.
///
/// Elements below the diagonal are nulled along alternating anti-diagonals,
/// with right-acting inverse cells on even passes and left-acting cells on
/// odd passes. The left cells are then pushed through the remaining diagonal
/// using `T(θ,φ)† · diag(e^{iα}, e^{iβ}) = diag(e^{i(β−φ+π)}, e^{iβ}) · T(θ, α−β+π)`,
/// leaving a single output phase screen. Layers are assigned as soon as both
/// modes of a cell are free, which reproduces the rectangular geometry.
pub fn clements_decompose(u: &ComplexMatrix) -> Result<MeshProgram> {
    if !u.is_square() {
        return Err(Error::Precondition(format!(
            "expected a square unitary, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let n = u.nrows();
    if n == 0 {
        return Err(Error::Precondition("empty matrix".into()));
    }
    let err = unitarity_error(u);
    if err > DECOMPOSE_UNITARY_TOL {
        return Err(Error::Precondition(format!(
            "matrix is not unitary (‖U†U − I‖_max = {err:e})"
        )));
    }
    let mut work = u.clone();
    let mut right: Vec<Nulling> = Vec::new();
    let mut left: Vec<Nulling> = Vec::new();

    for i in 0..n.saturating_sub(1) {
        if i % 2 == 0 {
            for j in 0..=i {
                let row = n - 1 - j;
                let col = i - j;
                // null work[row, col] mixing columns (col, col + 1)
                let a = work[(row, col)];
                let b = work[(row, col + 1)];
                let (theta, phi) = if a.norm() < 1e-300 {
                    (0.0, 0.0)
                } else if b.norm() < 1e-300 {
                    (PI / 2.0, 0.0)
                } else {
                    (a.norm().atan2(b.norm()), a.arg() - b.arg())
                };
                apply_cell_inverse_right(&mut work, col, theta, phi);
                check_nulled(&work, row, col)?;
                right.push(Nulling {
                    top: col,
                    theta,
                    phi,
                });
            }
        } else {
            for j in 1..=i + 1 {
                let row = n + j - i - 2;
                let col = j - 1;
                // null work[row, col] mixing rows (row - 1, row)
                let a = work[(row - 1, col)];
                let b = work[(row, col)];
                let (theta, phi) = if b.norm() < 1e-300 {
                    (0.0, 0.0)
                } else if a.norm() < 1e-300 {
                    (PI / 2.0, 0.0)
                } else {
                    (b.norm().atan2(a.norm()), b.arg() - a.arg() + PI)
                };
                apply_cell_left(&mut work, row - 1, theta, phi);
                check_nulled(&work, row, col)?;
                left.push(Nulling {
                    top: row - 1,
                    theta,
                    phi,
                });
            }
        }
    }

    let mut diag: Vec<f64> = (0..n).map(|k| work[(k, k)].arg()).collect();
    for k in 0..n {
        for l in 0..n {
            if k != l && work[(k, l)].norm() > 1e-7 {
                return Err(Error::Numerical {
                    row: k,
                    col: l,
                    residual: work[(k, l)].norm(),
                });
            }
        }
    }

    // U = L_1† ... L_k† D R_j ... R_1; move D to the far left.
    let mut pushed: Vec<Nulling> = Vec::with_capacity(left.len());
    for cell in left.iter().rev() {
        let alpha = diag[cell.top];
        let beta = diag[cell.top + 1];
        diag[cell.top] = beta - cell.phi + PI;
        pushed.push(Nulling {
            top: cell.top,
            theta: cell.theta,
            phi: alpha - beta + PI,
        });
    }
    // `pushed` holds T'_k, ..., T'_1 in the order they were produced, and the
    // product reads D · T'_1 · ... · T'_k · R_j · ... · R_1, so light meets
    // R_1 first and T'_1 last.
    let mut sequence: Vec<Nulling> = right.clone();
    sequence.extend(pushed.iter().copied());

    let mut free_at = vec![0usize; n];
    let mut cells = Vec::with_capacity(sequence.len());
    for cell in sequence {
        let layer = free_at[cell.top].max(free_at[cell.top + 1]);
        free_at[cell.top] = layer + 1;
        free_at[cell.top + 1] = layer + 1;
        cells.push(MziCell::new(layer, cell.top, cell.theta, cell.phi));
    }
    let mut mesh = MeshProgram {
        m: n,
        cells,
        output_phases: diag.into_iter().map(reduce_angle).collect(),
    };
    let order = mesh.traversal_order();
    mesh.cells = order.into_iter().map(|i| mesh.cells[i]).collect();
    Ok(mesh)
}

fn check_nulled(work: &ComplexMatrix, row: usize, col: usize) -> Result<()> {
    let residual = work[(row, col)].norm();
    if residual > 1e-7 {
        return Err(Error::Numerical { row, col, residual });
    }
    Ok(())
}

/// `(1/N) · Tr(|U_th†| · |U_exp|)` with entry-wise moduli.
pub fn amplitude_fidelity(u_exp: &ComplexMatrix, u_th: &ComplexMatrix) -> Result<f64> {
    if !u_exp.is_square() || u_exp.shape() != u_th.shape() {
        return Err(Error::Shape(format!(
            "amplitude fidelity needs equal square matrices, got {:?} and {:?}",
            u_exp.shape(),
            u_th.shape()
        )));
    }
    let n = u_exp.nrows();
    if n == 0 {
        return Err(Error::Shape("empty matrices".into()));
    }
    let sum: f64 = u_exp
        .iter()
        .zip(u_th.iter())
        .map(|(a, b)| a.norm() * b.norm())
        .sum();
    Ok(sum / n as f64)
}
