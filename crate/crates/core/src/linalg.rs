//! Dense complex linear algebra: permanents, PSD square roots and
//! Haar-random unitaries.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Largest matrix handled by [`permanent`].
pub const MAX_PERMANENT_DIM: usize = 16;

/// Eigenvalues down to this value are treated as round-off and clamped to 0.
pub const PSD_CLAMP: f64 = -1e-10;

pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// ‖U†U − I‖_max
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &ComplexMatrix::identity(n, n))
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_error(u) < tol
}

/// ‖H − H†‖_max
pub fn hermiticity_error(h: &ComplexMatrix) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

/// Permanent by Ryser's formula, visiting column subsets in Gray-code order
/// so each step updates the row sums with a single column.
pub fn permanent(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "permanent needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n > MAX_PERMANENT_DIM {
        return Err(Error::Dimension(format!(
            "permanent limited to n <= {MAX_PERMANENT_DIM}, got {n}"
        )));
    }
    Ok(ryser_gray(m))
}

fn ryser_gray(m: &ComplexMatrix) -> Complex64 {
    let n = m.nrows();
    match n {
        0 => return Complex64::new(1.0, 0.0),
        1 => return m[(0, 0)],
        2 => return m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)],
        _ => {}
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        gray ^= 1 << col;
        if gray & (1 << col) != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += m[(i, col)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= m[(i, col)];
            }
        }
        let prod = row_sums
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s);
        // (-1)^(n - |S|)
        if (n as u32 - gray.count_ones()) % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues ascending, with
/// eigenvectors as the matching columns.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors =
        ComplexMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Smallest eigenvalue of the Hermitian part of `h`.
pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    let (values, _) = hermitian_eigen(h)?;
    Ok(values.first().copied().unwrap_or(0.0))
}

/// Principal square root of a Hermitian PSD matrix.
pub fn matrix_sqrt_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(Error::Shape(format!(
            "matrix square root needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let herr = hermiticity_error(h);
    if herr > HERMITIAN_TOL {
        return Err(Error::Shape(format!(
            "matrix is not Hermitian (‖H − H†‖_max = {herr:e})"
        )));
    }
    let (values, vectors) = hermitian_eigen(h)?;
    if let Some(&lowest) = values.first() {
        if lowest < PSD_CLAMP {
            return Err(Error::NotPsd(lowest));
        }
    }
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(spectral_compose(&roots, &vectors))
}

/// V · diag(values) · V†
pub fn spectral_compose(values: &[f64], vectors: &ComplexMatrix) -> ComplexMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= v;
        }
    }
    scaled * vectors.adjoint()
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix, with the phases
/// of R's diagonal moved into Q.
pub fn haar_unitary(dim: usize, seed: u64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::Dimension("Haar unitary needs dim >= 1".into()));
    }
    let mut rng = seed::stream_rng(seed, seed::STREAM_HAAR, dim as u64);
    let ginibre = ComplexMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re, im) / std::f64::consts::SQRT_2
    });
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Unitary whose first row is ψ†, so it maps ψ onto the first basis vector.
/// Built by Gram–Schmidt completion against the standard basis.
pub fn unitary_mapping_to_first(psi: &ComplexVector) -> Result<ComplexMatrix> {
    let d = psi.len();
    let norm = psi.norm();
    if d == 0 || norm < 1e-12 {
        return Err(Error::InvalidInput("cannot rotate a null vector".into()));
    }
    let mut basis: Vec<ComplexVector> = vec![psi / c(norm, 0.0)];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v =
            ComplexVector::from_fn(d, |i, _| if i == k { c(1.0, 0.0) } else { c(0.0, 0.0) });
        for b in &basis {
            let proj = b.dotc(&v);
            v -= b * proj;
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v / c(n, 0.0));
        }
    }
    let cols = ComplexMatrix::from_columns(&basis);
    Ok(cols.adjoint())
}
