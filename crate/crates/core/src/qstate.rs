//! Qudit states: Bloch / Gell-Mann coordinates, simulated projective
//! tomography, maximum-likelihood reconstruction and Uhlmann fidelity.
//!
//! The operator basis is normalised as Tr(σ_a σ_b) = 2δ_ab, so that
//! ρ = 𝕀/d + v·σ/2 with v_a = Tr(ρ σ_a). For d = 2 it is (σx, σy, σz); for
//! d = 3 the eight Gell-Mann matrices λ1..λ8 in their usual numbering.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::multinomial_counts;
use crate::kernel::KernelMatrix;
use crate::linalg::{
    c, hermitian_eigen, hermiticity_error, spectral_compose, ComplexMatrix, ComplexVector,
};
use crate::seed;

pub const STATE_TOL: f64 = 1e-10;
/// Bloch vectors whose density matrix dips below this are rejected.
pub const UNPHYSICAL_TOL: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity (all to 1e-10).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!(
                "density matrix must be square and non-empty, got {:?}",
                matrix.shape()
            )));
        }
        let herr = hermiticity_error(&matrix);
        if herr > STATE_TOL {
            return Err(Error::Shape(format!(
                "density matrix not Hermitian (error {herr:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Shape(format!("density matrix trace is {tr}")));
        }
        let this = Self::from_matrix_unchecked(matrix);
        let lowest = this.min_eigenvalue();
        if lowest < -STATE_TOL {
            return Err(Error::NotPsd(lowest));
        }
        Ok(this)
    }

    /// Hermitises without checking anything else.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let herm = (&matrix + matrix.adjoint()).scale(0.5);
        DensityMatrix { matrix: herm }
    }

    /// |ψ⟩⟨ψ| for a non-zero (not necessarily normalised) vector.
    pub fn from_pure(psi: &ComplexVector) -> Result<Self> {
        let norm_sqr = psi.norm_squared();
        if norm_sqr < 1e-300 {
            return Err(Error::InvalidInput("null state vector".into()));
        }
        let m = (psi * psi.adjoint()).unscale(norm_sqr);
        Ok(Self::from_matrix_unchecked(m))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::identity(d, d).unscale(d as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix)
            .map(|(v, _)| v)
            .expect("density matrices are square")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// ½‖ρ − σ‖₁
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        check_same_dim(self, other)?;
        let diff = &self.matrix - &other.matrix;
        let (values, _) = hermitian_eigen(&diff)?;
        Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Probability of projecting onto `v` (assumed normalised).
    pub fn expectation_projector(&self, v: &ComplexVector) -> f64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        (&self.matrix * op).trace().re
    }
}

fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "density matrices of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    d: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let json = DensityMatrixJson {
            d,
            re: (0..d)
                .map(|i| (0..d).map(|j| self.matrix[(i, j)].re).collect())
                .collect(),
            im: (0..d)
                .map(|i| (0..d).map(|j| self.matrix[(i, j)].im).collect())
                .collect(),
        };
        json.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let json = DensityMatrixJson::deserialize(deserializer)?;
        let d = json.d;
        if json.re.len() != d
            || json.im.len() != d
            || json.re.iter().chain(&json.im).any(|r| r.len() != d)
        {
            return Err(D::Error::custom(format!("re/im must be {d}x{d}")));
        }
        let m = ComplexMatrix::from_fn(d, d, |i, j| c(json.re[i][j], json.im[i][j]));
        DensityMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Traceless Hermitian basis element.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisOperator {
    /// |j⟩⟨k| + |k⟩⟨j|
    Symmetric(usize, usize),
    /// −i|j⟩⟨k| + i|k⟩⟨j|
    Antisymmetric(usize, usize),
    Diagonal(Vec<f64>),
}

impl BasisOperator {
    pub fn matrix(&self, d: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(d, d);
        match self {
            BasisOperator::Symmetric(j, k) => {
                m[(*j, *k)] = c(1.0, 0.0);
                m[(*k, *j)] = c(1.0, 0.0);
            }
            BasisOperator::Antisymmetric(j, k) => {
                m[(*j, *k)] = c(0.0, -1.0);
                m[(*k, *j)] = c(0.0, 1.0);
            }
            BasisOperator::Diagonal(diag) => {
                for (i, &v) in diag.iter().enumerate() {
                    m[(i, i)] = c(v, 0.0);
                }
            }
        }
        m
    }

    /// Eigenbasis measured for this operator, as (eigenvalue, eigenvector)
    /// pairs. Degenerate operators use the computational basis.
    pub fn eigenbasis(&self, d: usize) -> Vec<(f64, ComplexVector)> {
        let unit = |i: usize| {
            ComplexVector::from_fn(d, |r, _| if r == i { c(1.0, 0.0) } else { c(0.0, 0.0) })
        };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            BasisOperator::Symmetric(j, k) | BasisOperator::Antisymmetric(j, k) => {
                let phase = if matches!(self, BasisOperator::Symmetric(..)) {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 1.0)
                };
                let plus = (unit(*j) + unit(*k) * phase) * c(h, 0.0);
                let minus = (unit(*j) - unit(*k) * phase) * c(h, 0.0);
                let mut out = vec![(1.0, plus), (-1.0, minus)];
                for i in (0..d).filter(|i| i != j && i != k) {
                    out.push((0.0, unit(i)));
                }
                out
            }
            BasisOperator::Diagonal(diag) => diag
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, unit(i)))
                .collect(),
        }
    }
}

/// Pauli (d = 2) or Gell-Mann (d = 3) operators.
pub fn operator_basis(d: usize) -> Result<Vec<BasisOperator>> {
    use BasisOperator::*;
    match d {
        2 => Ok(vec![
            Symmetric(0, 1),
            Antisymmetric(0, 1),
            Diagonal(vec![1.0, -1.0]),
        ]),
        3 => {
            let s3 = 3f64.sqrt();
            Ok(vec![
                Symmetric(0, 1),
                Antisymmetric(0, 1),
                Diagonal(vec![1.0, -1.0, 0.0]),
                Symmetric(0, 2),
                Antisymmetric(0, 2),
                Symmetric(1, 2),
                Antisymmetric(1, 2),
                Diagonal(vec![1.0 / s3, 1.0 / s3, -2.0 / s3]),
            ])
        }
        _ => Err(Error::Dimension(format!(
            "operator basis defined for d = 2, 3; got {d}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub d: usize,
    pub components: Vec<f64>,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// sqrt(2(d−1)/d), the length of every pure-state vector.
    pub fn max_norm(d: usize) -> f64 {
        (2.0 * (d as f64 - 1.0) / d as f64).sqrt()
    }
}

pub fn bloch_to_density(v: &BlochVector) -> Result<DensityMatrix> {
    let basis = operator_basis(v.d)?;
    if v.components.len() != basis.len() {
        return Err(Error::Dimension(format!(
            "d = {} needs {} components, got {}",
            v.d,
            basis.len(),
            v.components.len()
        )));
    }
    let d = v.d;
    let mut m = ComplexMatrix::identity(d, d).unscale(d as f64);
    for (op, &coef) in basis.iter().zip(&v.components) {
        m += op.matrix(d).scale(0.5 * coef);
    }
    let rho = DensityMatrix::from_matrix_unchecked(m);
    let lowest = rho.min_eigenvalue();
    if lowest < UNPHYSICAL_TOL {
        return Err(Error::Unphysical(lowest));
    }
    Ok(rho)
}

pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    let d = rho.dim();
    let components = operator_basis(d)?
        .iter()
        .map(|op| rho.expectation(&op.matrix(d)))
        .collect();
    Ok(BlochVector { d, components })
}

/// Outcome counts per measured basis. Basis `a` is the eigenbasis of the
/// a-th operator of [`operator_basis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyCounts {
    pub d: usize,
    pub shots_per_basis: u64,
    pub counts: BTreeMap<usize, Vec<u64>>,
}

impl TomographyCounts {
    /// Counts rounded from the exact outcome probabilities, the last outcome
    /// of each basis absorbing the rounding.
    pub fn expected(rho: &DensityMatrix, shots_per_basis: u64) -> Result<Self> {
        let d = rho.dim();
        let mut counts = BTreeMap::new();
        for (a, op) in operator_basis(d)?.iter().enumerate() {
            let probs = basis_probabilities(rho, op);
            let mut row: Vec<u64> = probs
                .iter()
                .map(|p| (p * shots_per_basis as f64).round() as u64)
                .collect();
            let partial: u64 = row[..d - 1].iter().sum();
            row[d - 1] = shots_per_basis.saturating_sub(partial);
            counts.insert(a, row);
        }
        Ok(TomographyCounts {
            d,
            shots_per_basis,
            counts,
        })
    }

    /// Empirical ⟨σ_a⟩ for each measured basis.
    pub fn expectations(&self) -> Result<BTreeMap<usize, f64>> {
        let basis = operator_basis(self.d)?;
        let mut out = BTreeMap::new();
        for (&a, row) in &self.counts {
            let op = basis
                .get(a)
                .ok_or_else(|| Error::InvalidInput(format!("basis index {a} out of range")))?;
            let total: u64 = row.iter().sum();
            let value = op
                .eigenbasis(self.d)
                .iter()
                .zip(row)
                .map(|((ev, _), &n)| ev * n as f64)
                .sum::<f64>()
                / total.max(1) as f64;
            out.insert(a, value);
        }
        Ok(out)
    }
}

fn basis_probabilities(rho: &DensityMatrix, op: &BasisOperator) -> Vec<f64> {
    let probs: Vec<f64> = op
        .eigenbasis(rho.dim())
        .iter()
        .map(|(_, v)| rho.expectation_projector(v).max(0.0))
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter().map(|p| p / total).collect()
}

pub fn simulate_tomography(
    rho: &DensityMatrix,
    shots_per_basis: u64,
    seed: u64,
) -> Result<TomographyCounts> {
    if shots_per_basis == 0 {
        return Err(Error::InvalidInput(
            "shots per basis must be at least 1".into(),
        ));
    }
    let d = rho.dim();
    let mut counts = BTreeMap::new();
    for (a, op) in operator_basis(d)?.iter().enumerate() {
        let probs = basis_probabilities(rho, op);
        let mut rng = seed::stream_rng(seed, seed::STREAM_TOMOGRAPHY, a as u64);
        counts.insert(a, multinomial_counts(&probs, shots_per_basis, &mut rng));
    }
    Ok(TomographyCounts {
        d,
        shots_per_basis,
        counts,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once the per-shot log-likelihood gain falls below this.
    pub tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iterations: 10_000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub state: DensityMatrix,
    /// Per-shot log-likelihood of the start point and of every iterate.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
}

struct Measurement {
    projector: ComplexMatrix,
    frequency: f64,
}

fn log_likelihood(rho: &ComplexMatrix, data: &[Measurement]) -> f64 {
    data.iter()
        .filter(|m| m.frequency > 0.0)
        .map(|m| m.frequency * (rho * &m.projector).trace().re.max(1e-300).ln())
        .sum()
}

fn normalised_sandwich(left: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let next = left * rho * left.adjoint();
    let tr = next.trace().re;
    let next = next.unscale(tr);
    (&next + next.adjoint()).scale(0.5)
}

fn check_complete(d: usize, projectors: &[ComplexMatrix]) -> Result<()> {
    // real coordinates of each Hermitian projector: diagonal, Re and Im of the upper triangle
    let rows: Vec<Vec<f64>> = projectors
        .iter()
        .map(|p| {
            let mut v = Vec::with_capacity(d * d);
            for i in 0..d {
                v.push(p[(i, i)].re);
                for j in i + 1..d {
                    v.push(p[(i, j)].re);
                    v.push(p[(i, j)].im);
                }
            }
            v
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), d * d, |i, j| rows[i][j]);
    let rank = a
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-9)
        .count();
    if rank < d * d {
        return Err(Error::NotInformationallyComplete(format!(
            "measured projectors span {rank} of {} operator dimensions",
            d * d
        )));
    }
    Ok(())
}

/// Maximum-likelihood state by the iterative RρR map, started from 𝕀/d.
///
/// A step that would lower the likelihood is replaced by the diluted map
/// (𝕀 + εR)ρ(𝕀 + εR) with ε halved until the likelihood does not drop.
pub fn mle_reconstruct(counts: &TomographyCounts) -> Result<DensityMatrix> {
    mle_reconstruct_with(counts, MleOptions::default()).map(|r| r.state)
}

pub fn mle_reconstruct_with(counts: &TomographyCounts, options: MleOptions) -> Result<MleResult> {
    let d = counts.d;
    let basis = operator_basis(d)?;
    let total: u64 = counts.counts.values().flat_map(|r| r.iter()).sum();
    if total == 0 {
        return Err(Error::NotInformationallyComplete(
            "no counts recorded".into(),
        ));
    }
    let mut data = Vec::new();
    for (&a, row) in &counts.counts {
        let op = basis
            .get(a)
            .ok_or_else(|| Error::InvalidInput(format!("basis index {a} out of range")))?;
        if row.len() != d {
            return Err(Error::InvalidInput(format!(
                "basis {a} has {} outcomes, expected {d}",
                row.len()
            )));
        }
        for ((_, v), &n) in op.eigenbasis(d).iter().zip(row) {
            data.push(Measurement {
                projector: v * v.adjoint(),
                frequency: n as f64 / total as f64,
            });
        }
    }
    let projectors: Vec<ComplexMatrix> = data.iter().map(|m| m.projector.clone()).collect();
    check_complete(d, &projectors)?;

    // Σ projectors weighted by the share of shots in their basis; equals 𝕀
    // when every basis got the same number of shots.
    let identity = ComplexMatrix::identity(d, d);
    let mut rho = identity.unscale(d as f64);
    let mut ll = log_likelihood(&rho, &data);
    let mut history = vec![ll];
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let mut r = ComplexMatrix::zeros(d, d);
        for m in data.iter().filter(|m| m.frequency > 0.0) {
            let p = (&rho * &m.projector).trace().re.max(1e-300);
            r += m.projector.scale(m.frequency / p);
        }
        let mut candidate = normalised_sandwich(&r, &rho);
        let mut cand_ll = log_likelihood(&candidate, &data);
        let mut eps = 1.0;
        while cand_ll < ll && eps > 1e-12 {
            let step = &identity + r.scale(eps);
            candidate = normalised_sandwich(&step, &rho);
            cand_ll = log_likelihood(&candidate, &data);
            eps *= 0.5;
        }
        if cand_ll < ll {
            // no ascent direction left at machine precision
            break;
        }
        let gain = cand_ll - ll;
        rho = candidate;
        ll = cand_ll;
        history.push(ll);
        if gain < options.tolerance {
            break;
        }
    }
    Ok(MleResult {
        state: DensityMatrix::from_matrix_unchecked(rho),
        log_likelihood: history,
        iterations,
    })
}

/// Eigenvalues at or below this count as exact zeros inside the fidelity.
const FIDELITY_RANK_TOL: f64 = 1e-13;

/// (Tr √(√ρ σ √ρ))²
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    // round-off eigenvalues of rank-deficient states would otherwise add
    // O(1e-9) through the square roots
    let root_of = |v: f64| if v > FIDELITY_RANK_TOL { v.sqrt() } else { 0.0 };
    let (values, vectors) = hermitian_eigen(rho.matrix())?;
    let root = spectral_compose(
        &values.iter().map(|&v| root_of(v)).collect::<Vec<_>>(),
        &vectors,
    );
    let inner = &root * sigma.matrix() * &root;
    let (values, _) = hermitian_eigen(&((&inner + inner.adjoint()).scale(0.5)))?;
    let tr: f64 = values.iter().map(|&v| root_of(v)).sum();
    Ok(tr * tr)
}

/// K_ij = F(ρ_i, ρ_j), unit diagonal, symmetric by construction.
pub fn fidelity_kernel(states: &[DensityMatrix]) -> Result<KernelMatrix> {
    fidelity_kernel_labeled(states, (0..states.len()).map(|i| i.to_string()).collect())
}

pub fn fidelity_kernel_labeled(
    states: &[DensityMatrix],
    labels: Vec<String>,
) -> Result<KernelMatrix> {
    let n = states.len();
    if n == 0 {
        return Err(Error::Kernel("no states".into()));
    }
    let d = states[0].dim();
    if let Some(bad) = states.iter().position(|s| s.dim() != d) {
        return Err(Error::Shape(format!(
            "state {bad} has dimension {}, expected {d}",
            states[bad].dim()
        )));
    }
    let mut values = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let f = uhlmann_fidelity(&states[i], &states[j])?.clamp(0.0, 1.0);
            values[(i, j)] = f;
            values[(j, i)] = f;
        }
    }
    KernelMatrix::new(values, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(v: &[(f64, f64)]) -> ComplexVector {
        let psi = ComplexVector::from_iterator(v.len(), v.iter().map(|&(a, b)| c(a, b)));
        let n = psi.norm();
        psi.unscale(n)
    }

    #[test]
    fn basis_is_orthonormal_in_trace_inner_product() {
        for d in [2, 3] {
            let ops: Vec<ComplexMatrix> = operator_basis(d)
                .unwrap()
                .iter()
                .map(|o| o.matrix(d))
                .collect();
            assert_eq!(ops.len(), d * d - 1);
            for (a, x) in ops.iter().enumerate() {
                assert!(x.trace().norm() < 1e-14);
                assert!(hermiticity_error(x) < 1e-15);
                for (b, y) in ops.iter().enumerate() {
                    let ip = (x * y).trace();
                    let expected = if a == b { 2.0 } else { 0.0 };
                    assert!((ip - c(expected, 0.0)).norm() < 1e-12, "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn eigenbases_diagonalise_their_operator() {
        for d in [2, 3] {
            for op in operator_basis(d).unwrap() {
                let m = op.matrix(d);
                let basis = op.eigenbasis(d);
                assert_eq!(basis.len(), d);
                for (ev, v) in &basis {
                    let mv = &m * v;
                    assert!((mv - v * c(*ev, 0.0)).norm() < 1e-12);
                    assert!((v.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_vector_is_maximally_mixed() {
        let rho = bloch_to_density(&BlochVector {
            d: 2,
            components: vec![0.0; 3],
        })
        .unwrap();
        assert!((rho.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-15);
    }

    #[test]
    fn z_vector_is_ground_state() {
        let rho = bloch_to_density(&BlochVector {
            d: 2,
            components: vec![0.0, 0.0, 1.0],
        })
        .unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(rho.matrix()[(1, 1)].norm() < 1e-15);
        let v = density_to_bloch(&rho).unwrap();
        assert!((v.components[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unphysical_vector_rejected() {
        let err = bloch_to_density(&BlochVector {
            d: 2,
            components: vec![0.0, 0.0, 1.5],
        });
        assert!(matches!(err, Err(Error::Unphysical(_))));
    }

    #[test]
    fn pure_qutrit_round_trip_and_norm() {
        let psi = ket(&[(0.3, 0.1), (-0.5, 0.4), (0.2, -0.7)]);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let v = density_to_bloch(&rho).unwrap();
        assert!((v.norm() - BlochVector::max_norm(3)).abs() < 1e-12);
        let back = bloch_to_density(&v).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn sigma_z_tomography_of_ground_state() {
        let rho = DensityMatrix::from_pure(&ket(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        let counts = simulate_tomography(&rho, 1000, 4).unwrap();
        assert_eq!(counts.counts[&2], vec![1000, 0]);
        for row in counts.counts.values() {
            assert_eq!(row.iter().sum::<u64>(), 1000);
        }
    }

    #[test]
    fn mle_recovers_plus_state_from_exact_frequencies() {
        let plus = ket(&[(1.0, 0.0), (1.0, 0.0)]);
        let rho = DensityMatrix::from_pure(&plus).unwrap();
        let counts = TomographyCounts::expected(&rho, 1_000_000_000_000).unwrap();
        let result = mle_reconstruct_with(&counts, MleOptions::default()).unwrap();
        let f = uhlmann_fidelity(&result.state, &rho).unwrap();
        assert!(f >= 1.0 - 1e-6, "fidelity {f}");
        for w in result.log_likelihood.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn mle_of_maximally_mixed_counts() {
        let rho = DensityMatrix::maximally_mixed(2);
        let counts = simulate_tomography(&rho, 1_000_000, 8).unwrap();
        let est = mle_reconstruct(&counts).unwrap();
        assert!((est.matrix() - rho.matrix()).norm() < 0.01);
    }

    #[test]
    fn incomplete_basis_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        let mut counts = simulate_tomography(&rho, 100, 1).unwrap();
        counts.counts.remove(&1);
        assert!(matches!(
            mle_reconstruct(&counts),
            Err(Error::NotInformationallyComplete(_))
        ));
    }

    #[test]
    fn fidelity_edge_cases() {
        let zero = DensityMatrix::from_pure(&ket(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        let one = DensityMatrix::from_pure(&ket(&[(0.0, 0.0), (1.0, 0.0)])).unwrap();
        assert!((uhlmann_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(uhlmann_fidelity(&zero, &one).unwrap().abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            uhlmann_fidelity(&zero, &mixed),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn single_state_kernel() {
        let k = fidelity_kernel(&[DensityMatrix::maximally_mixed(2)]).unwrap();
        assert_eq!(k.dim(), 1);
        assert_eq!(k.get(0, 0), 1.0);
    }

    #[test]
    fn density_json_layout() {
        let rho = DensityMatrix::from_pure(&ket(&[(1.0, 0.0), (0.0, 1.0)])).unwrap();
        let json = serde_json::to_value(&rho).unwrap();
        assert_eq!(json["d"], 2);
        assert!((json["im"][1][0].as_f64().unwrap() - 0.5).abs() < 1e-15);
        let back: DensityMatrix = serde_json::from_value(json).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-15);
    }
}
