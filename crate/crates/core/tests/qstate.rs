mod common;

use std::collections::BTreeMap;

use abs_core::abs::{ideal_kernel, ideal_states};
use abs_core::linalg::{c, max_abs_diff, ComplexMatrix};
use abs_core::qstate::{
    bloch_to_density, density_to_bloch, fidelity_kernel, mle_reconstruct, mle_reconstruct_with,
    operator_basis, simulate_tomography, uhlmann_fidelity, BlochVector, DensityMatrix, MleOptions,
    TomographyCounts,
};
use abs_core::Error;
use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

use common::{ideal_conditional, load_preset, random_density, random_ket, rng};

fn density(m: ComplexMatrix) -> DensityMatrix {
    DensityMatrix::new(m).unwrap()
}

/// (Σ singular values of √ρ·√σ)², with square roots from nalgebra's
/// eigensolver; round-off eigenvalues of rank-deficient inputs count as zero.
fn fidelity_oracle(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    let root = |m: &ComplexMatrix| {
        let eig = SymmetricEigen::new(m.clone());
        let vals = eig
            .eigenvalues
            .map(|v| Complex64::new(if v > 1e-14 { v.sqrt() } else { 0.0 }, 0.0));
        &eig.eigenvectors * ComplexMatrix::from_diagonal(&vals) * eig.eigenvectors.adjoint()
    };
    let product = root(rho) * root(sigma);
    let trace_norm: f64 = product.singular_values().iter().sum();
    trace_norm * trace_norm
}

fn ket(v: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(v)
}

#[test]
fn bloch_examples() {
    let mixed = bloch_to_density(&BlochVector {
        d: 2,
        components: vec![0.0; 3],
    })
    .unwrap();
    assert!(max_abs_diff(mixed.matrix(), &ComplexMatrix::identity(2, 2).scale(0.5)) < 1e-15);
    let up = bloch_to_density(&BlochVector {
        d: 2,
        components: vec![0.0, 0.0, 1.0],
    })
    .unwrap();
    assert!((up.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
    assert!(up.matrix()[(1, 1)].norm() < 1e-15);
    assert!(matches!(
        bloch_to_density(&BlochVector {
            d: 2,
            components: vec![0.0, 0.0, 1.5]
        }),
        Err(Error::Unphysical(_))
    ));
    assert!(matches!(
        bloch_to_density(&BlochVector {
            d: 3,
            components: vec![0.0; 3]
        }),
        Err(Error::Dimension(_))
    ));
    assert!(matches!(operator_basis(4), Err(Error::Dimension(_))));
}

#[test]
fn basis_is_orthogonal_and_traceless() {
    for d in [2, 3] {
        let ops: Vec<ComplexMatrix> = operator_basis(d)
            .unwrap()
            .iter()
            .map(|o| o.matrix(d))
            .collect();
        assert_eq!(ops.len(), d * d - 1);
        for (a, x) in ops.iter().enumerate() {
            assert!(x.trace().norm() < 1e-15);
            for (b, y) in ops.iter().enumerate() {
                let expected = if a == b { 2.0 } else { 0.0 };
                assert!(((x * y).trace() - c(expected, 0.0)).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn computational_state_has_deterministic_z_counts() {
    let up = density(ComplexMatrix::from_diagonal(&ket(&[
        c(1.0, 0.0),
        c(0.0, 0.0),
    ])));
    let counts = simulate_tomography(&up, 1000, 4).unwrap();
    assert_eq!(counts.counts[&2], vec![1000, 0]);
    assert!(counts
        .counts
        .values()
        .all(|row| row.iter().sum::<u64>() == 1000));
    assert!(matches!(
        simulate_tomography(&up, 0, 4),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn maximally_mixed_frequencies_are_balanced() {
    let shots = 1_000_000u64;
    let counts = simulate_tomography(&DensityMatrix::maximally_mixed(2), shots, 5).unwrap();
    let sigma = (shots as f64 * 0.25).sqrt();
    for row in counts.counts.values() {
        assert!(
            (row[0] as f64 - shots as f64 / 2.0).abs() < 5.0 * sigma,
            "{row:?}"
        );
    }
}

#[test]
fn qutrit_expectations_are_within_five_sigma() {
    let rho = density(random_density(&mut rng(6), 3, 2));
    let shots = 200_000u64;
    let counts = simulate_tomography(&rho, shots, 7).unwrap();
    let empirical = counts.expectations().unwrap();
    for (a, op) in operator_basis(3).unwrap().iter().enumerate() {
        let m = op.matrix(3);
        let exact = (rho.matrix() * &m).trace().re;
        let second = (rho.matrix() * &m * &m).trace().re;
        let sigma = ((second - exact * exact).max(0.0) / shots as f64).sqrt();
        assert!(
            (empirical[&a] - exact).abs() <= 5.0 * sigma + 1e-12,
            "operator {a}"
        );
    }
    assert_eq!(
        simulate_tomography(&rho, 1000, 8).unwrap(),
        simulate_tomography(&rho, 1000, 8).unwrap()
    );
}

#[test]
fn mle_recovers_plus_from_exact_counts() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = ket(&[c(h, 0.0), c(h, 0.0)]);
    let rho = DensityMatrix::from_pure(&plus).unwrap();
    let counts = TomographyCounts::expected(&rho, 1_000_000_000).unwrap();
    let result = mle_reconstruct_with(&counts, MleOptions::default()).unwrap();
    assert!(result
        .log_likelihood
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-12));
    let f = uhlmann_fidelity(&result.state, &rho).unwrap();
    assert!(f >= 1.0 - 1e-6, "{f}");
}

#[test]
fn mle_of_maximally_mixed_is_close() {
    let target = DensityMatrix::maximally_mixed(2);
    let counts = simulate_tomography(&target, 1_000_000, 9).unwrap();
    let estimate = mle_reconstruct(&counts).unwrap();
    let distance = (estimate.matrix() - target.matrix()).norm();
    assert!(distance < 0.01, "{distance}");
    assert!(estimate.min_eigenvalue() >= -1e-12);
    assert!((estimate.trace() - 1.0).abs() < 1e-12);
}

#[test]
fn mle_reconstructs_pure_qutrits() {
    let psi = random_ket(&mut rng(10), 3);
    let rho = DensityMatrix::from_pure(&psi).unwrap();
    let counts = simulate_tomography(&rho, 100_000, 11).unwrap();
    let f = uhlmann_fidelity(&mle_reconstruct(&counts).unwrap(), &rho).unwrap();
    assert!(f >= 0.995, "{f}");
}

#[test]
fn incomplete_counts_are_rejected() {
    let mut counts = TomographyCounts::expected(&DensityMatrix::maximally_mixed(2), 100).unwrap();
    counts.counts.remove(&1);
    assert!(matches!(
        mle_reconstruct(&counts),
        Err(Error::NotInformationallyComplete(_))
    ));
    let empty = TomographyCounts {
        d: 3,
        shots_per_basis: 10,
        counts: BTreeMap::new(),
    };
    assert!(matches!(
        mle_reconstruct(&empty),
        Err(Error::NotInformationallyComplete(_))
    ));
}

#[test]
fn fidelity_examples() {
    let rho = density(random_density(&mut rng(12), 3, 3));
    assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
    let zero = DensityMatrix::from_pure(&ket(&[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
    let one = DensityMatrix::from_pure(&ket(&[c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
    assert!(uhlmann_fidelity(&zero, &one).unwrap().abs() < 1e-15);
    assert!(matches!(
        uhlmann_fidelity(&zero, &rho),
        Err(Error::Shape(_))
    ));
}

#[test]
fn kernel_examples() {
    let single = fidelity_kernel(&[DensityMatrix::maximally_mixed(3)]).unwrap();
    assert_eq!(single.dim(), 1);
    assert_eq!(single.get(0, 0), 1.0);

    let scheme = load_preset("platformA");
    let kernel = fidelity_kernel(&ideal_states(&scheme).unwrap()).unwrap();
    let oracle: Vec<ComplexMatrix> = (0..scheme.outcome_count())
        .map(|i| ideal_conditional(&scheme, i).1)
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            let expected = (&oracle[i] * &oracle[j]).trace().re;
            assert!((kernel.get(i, j) - expected).abs() < 1e-9, "({i}, {j})");
        }
    }

    for name in ["platformB2", "platformB3"] {
        let scheme = load_preset(name);
        let from_states = fidelity_kernel(&ideal_states(&scheme).unwrap()).unwrap();
        let overlaps = ideal_kernel(&scheme).unwrap();
        assert!(
            (from_states.values() - overlaps.values()).abs().max() < 1e-10,
            "{name}"
        );
    }
}

#[test]
fn density_matrix_json() {
    let rho = density(random_density(&mut rng(13), 3, 2));
    let text = serde_json::to_string(&rho).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["d"], 3);
    assert_eq!(value["re"].as_array().unwrap().len(), 3);
    let back: DensityMatrix = serde_json::from_str(&text).unwrap();
    assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-15);
    assert!(serde_json::from_str::<DensityMatrix>(
        r#"{"d": 2, "re": [[2, 0], [0, 0]], "im": [[0, 0], [0, 0]]}"#
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bloch_round_trip(seed in any::<u64>(), d in 2usize..4, rank in 1usize..4) {
        let rho = density(random_density(&mut rng(seed), d, rank.min(d)));
        let v = density_to_bloch(&rho).unwrap();
        prop_assert_eq!(v.components.len(), d * d - 1);
        prop_assert!(v.norm() <= BlochVector::max_norm(d) + 1e-9);
        let back = bloch_to_density(&v).unwrap();
        prop_assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn fidelity_matches_spectral_oracle(seed in any::<u64>(), d in 2usize..4, ra in 1usize..4, rb in 1usize..4) {
        let mut r = rng(seed);
        let a = random_density(&mut r, d, ra.min(d));
        let b = random_density(&mut r, d, rb.min(d));
        let f = uhlmann_fidelity(&density(a.clone()), &density(b.clone())).unwrap();
        let g = uhlmann_fidelity(&density(b.clone()), &density(a.clone())).unwrap();
        prop_assert!((f - fidelity_oracle(&a, &b)).abs() < 1e-9);
        prop_assert!((f - g).abs() < 1e-9);
        prop_assert!((0.0..=1.0 + 1e-9).contains(&f));
    }

    #[test]
    fn pure_fidelity_is_squared_overlap(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let (x, y) = (random_ket(&mut r, d), random_ket(&mut r, d));
        let f = uhlmann_fidelity(&DensityMatrix::from_pure(&x).unwrap(), &DensityMatrix::from_pure(&y).unwrap()).unwrap();
        prop_assert!((f - x.dotc(&y).norm_sqr()).abs() < 1e-10);
        let rho = random_density(&mut r, d, d);
        let mixed = uhlmann_fidelity(&density(rho.clone()), &DensityMatrix::from_pure(&x).unwrap()).unwrap();
        prop_assert!((mixed - x.dotc(&(&rho * &x)).re).abs() < 1e-10);
    }
}
