//! Slow reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's numerical code: photons are evolved
//! as first-quantised, explicitly symmetrised product states, permanents are
//! plain permutation sums and meshes are multiplied out cell by cell.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::PathBuf;

use abs_core::abs::{AbsScheme, RuleFamily};
use abs_core::fock::FockState;
use abs_core::interferometer::MeshProgram;
use abs_core::linalg::ComplexMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PRESETS: [&str; 4] = ["platformA", "platformB1", "platformB2", "platformB3"];

pub fn preset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(format!("{name}.json"))
}

pub fn load_preset(name: &str) -> AbsScheme {
    let text = std::fs::read_to_string(preset_path(name)).expect("preset file");
    AbsScheme::from_json(&text).expect("valid preset")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Unitary from the QR factor of a random complex matrix (not Haar; enough
/// for oracle comparisons).
pub fn random_unitary(rng: &mut impl Rng, m: usize) -> ComplexMatrix {
    random_complex_matrix(rng, m, m).qr().q()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Σ_σ Π_i a[i, σ(i)]
pub fn naive_permanent(a: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    permutations(n)
        .iter()
        .map(|p| (0..n).map(|i| a[(i, p[i])]).product::<Complex64>())
        .sum()
}

pub fn mzi(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let e = Complex64::from_polar(1.0, phi);
    [
        [e * theta.cos(), Complex64::new(-theta.sin(), 0.0)],
        [e * theta.sin(), Complex64::new(theta.cos(), 0.0)],
    ]
}

/// Multiplies out the mesh with full m×m matrices, cells sorted by layer.
pub fn mesh_product(mesh: &MeshProgram) -> ComplexMatrix {
    let m = mesh.m;
    let mut cells = mesh.cells.clone();
    cells.sort_by_key(|c| c.layer);
    let mut u = ComplexMatrix::identity(m, m);
    for cell in &cells {
        let t = mzi(cell.theta, cell.phi);
        let mut block = ComplexMatrix::identity(m, m);
        let a = cell.top_mode;
        block[(a, a)] = t[0][0];
        block[(a, a + 1)] = t[0][1];
        block[(a + 1, a)] = t[1][0];
        block[(a + 1, a + 1)] = t[1][1];
        u = block * u;
    }
    let phases = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        (0..m)
            .map(|j| Complex64::from_polar(1.0, mesh.output_phases.get(j).copied().unwrap_or(0.0))),
    ));
    phases * u
}

/// All patterns of `r` photons on `k` modes, descending lexicographic.
pub fn outcome_patterns(k: usize, r: usize, bunching: bool) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut counter = vec![0u8; k];
    loop {
        let total: usize = counter.iter().map(|&x| x as usize).sum();
        if total == r && (bunching || counter.iter().all(|&x| x <= 1)) {
            out.push(counter.clone());
        }
        let mut i = 0;
        loop {
            if i == k {
                out.sort_by(|a, b| b.cmp(a));
                return out;
            }
            counter[i] += 1;
            if counter[i] as usize > r {
                counter[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Slot angles for a rule evaluated on `pattern`, from the closed forms.
pub fn rule_angles(scheme: &AbsScheme, rule_index: usize, pattern: &[u8]) -> Vec<(f64, f64)> {
    let cfg = scheme.config();
    let slots = cfg.adaptive_slots.len();
    let params = &cfg.rule.parameters;
    match cfg.rule.family {
        RuleFamily::CascadePiHalf => {
            let lead = usize::from(params.inclusive.unwrap_or(false));
            let phi = params.phi.unwrap_or(FRAC_PI_4);
            (0..slots)
                .map(|s| {
                    let seen: f64 = pattern.iter().take(s + lead).map(|&o| o as f64).sum();
                    (FRAC_PI_2 * seen, phi)
                })
                .collect()
        }
        RuleFamily::GaussianB2 | RuleFamily::GaussianB3 => {
            let span = params
                .span
                .unwrap_or(if cfg.rule.family == RuleFamily::GaussianB3 {
                    4
                } else {
                    5
                }) as f64;
            let scale = params.scale.unwrap_or(5.0);
            let mut at = Vec::new();
            for (i, &o) in pattern.iter().enumerate() {
                for _ in 0..o {
                    at.push(i);
                }
            }
            let value = if at[0] == at[1] {
                params.bunched_offset.unwrap_or(11.0) + at[0] as f64
            } else {
                let (low, high) = (at[0].min(at[1]), at[0].max(at[1]));
                high as f64 + (1..=low).map(|t| span - t as f64).sum::<f64>()
            };
            vec![(value / scale, value / scale); slots]
        }
        RuleFamily::ExplicitTable => {
            let entry = &cfg.rule.table.as_ref().expect("table")[rule_index];
            if entry.len() == 1 {
                vec![entry[0]; slots]
            } else {
                entry.clone()
            }
        }
    }
}

/// Realised unitary of outcome `index`, assembled from the config alone.
pub fn realized_unitary(scheme: &AbsScheme, index: usize) -> ComplexMatrix {
    let cfg = scheme.config();
    let patterns = outcome_patterns(cfg.adaptive_modes.len(), cfg.r, cfg.allow_bunching);
    let rule_index = if cfg.assignment.is_empty() {
        index
    } else {
        cfg.assignment[index]
    };
    let angles = rule_angles(scheme, rule_index, &patterns[rule_index]);
    let mut mesh = cfg.base_mesh.clone();
    for (&slot, &(theta, phi)) in cfg.adaptive_slots.iter().zip(&angles) {
        mesh.cells[slot].theta = theta;
        mesh.cells[slot].phi = phi;
    }
    mesh_product(&mesh)
}

/// A photon entering spatial mode `mode` with internal amplitudes `internal`.
#[derive(Debug, Clone)]
pub struct Photon {
    pub mode: usize,
    pub internal: Vec<Complex64>,
}

pub fn indistinguishable(input: &FockState) -> Vec<Photon> {
    input
        .occupations()
        .iter()
        .enumerate()
        .flat_map(|(mode, &o)| {
            std::iter::repeat_n(
                Photon {
                    mode,
                    internal: vec![Complex64::new(1.0, 0.0)],
                },
                o as usize,
            )
        })
        .collect()
}

/// Symmetrised n-photon state after `u`, in first quantisation. A
/// single-particle index is `mode * labels + label`.
pub struct Evolved {
    pub modes: usize,
    pub labels: usize,
    phis: Vec<Vec<Complex64>>,
    perms: Vec<Vec<usize>>,
    norm: f64,
}

impl Evolved {
    pub fn new(u: &ComplexMatrix, photons: &[Photon]) -> Self {
        let modes = u.nrows();
        let labels = photons.iter().map(|p| p.internal.len()).max().unwrap_or(1);
        let phis: Vec<Vec<Complex64>> = photons
            .iter()
            .map(|p| {
                let mut v = vec![Complex64::new(0.0, 0.0); modes * labels];
                for out in 0..modes {
                    for (l, &a) in p.internal.iter().enumerate() {
                        v[out * labels + l] = u[(out, p.mode)] * a;
                    }
                }
                v
            })
            .collect();
        let n = photons.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            phis[i]
                .iter()
                .zip(&phis[j])
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
        });
        let perms = permutations(n);
        let norm = (perms.len() as f64 * naive_permanent(&gram).re).sqrt();
        Evolved {
            modes,
            labels,
            phis,
            perms,
            norm,
        }
    }

    pub fn photons(&self) -> usize {
        self.phis.len()
    }

    pub fn amplitude(&self, tuple: &[usize]) -> Complex64 {
        let sum: Complex64 = self
            .perms
            .iter()
            .map(|p| {
                (0..tuple.len())
                    .map(|i| self.phis[p[i]][tuple[i]])
                    .product::<Complex64>()
            })
            .sum();
        sum / self.norm
    }

    /// Calls `f` on every tuple of single-particle indices.
    pub fn for_each_tuple(&self, mut f: impl FnMut(&[usize])) {
        let n = self.photons();
        let dim = self.modes * self.labels;
        let mut tuple = vec![0usize; n];
        loop {
            f(&tuple);
            let mut i = 0;
            loop {
                if i == n {
                    return;
                }
                tuple[i] += 1;
                if tuple[i] == dim {
                    tuple[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    pub fn mode_of(&self, index: usize) -> usize {
        index / self.labels
    }
}

/// Mode-occupation distribution, summed over internal labels.
pub fn mode_distribution(u: &ComplexMatrix, photons: &[Photon]) -> BTreeMap<Vec<u8>, f64> {
    let ev = Evolved::new(u, photons);
    let mut out = BTreeMap::new();
    ev.for_each_tuple(|t| {
        let p = ev.amplitude(t).norm_sqr();
        if p > 0.0 {
            let mut occ = vec![0u8; ev.modes];
            for &i in t {
                occ[ev.mode_of(i)] += 1;
            }
            *out.entry(occ).or_insert(0.0) += p;
        }
    });
    out
}

/// Unitary on 2m modes sending mode j to itself with amplitude sqrt(eff[j])
/// and to the loss mode m + j otherwise, after `u`.
pub fn with_loss_modes(u: &ComplexMatrix, eff: &[f64]) -> ComplexMatrix {
    let m = u.nrows();
    let mut big = ComplexMatrix::identity(2 * m, 2 * m);
    big.view_mut((0, 0), (m, m)).copy_from(u);
    let mut split = ComplexMatrix::identity(2 * m, 2 * m);
    for j in 0..m {
        let (t, r) = (eff[j].sqrt(), (1.0 - eff[j]).sqrt());
        split[(j, j)] = Complex64::new(t, 0.0);
        split[(j, m + j)] = Complex64::new(-r, 0.0);
        split[(m + j, j)] = Complex64::new(r, 0.0);
        split[(m + j, m + j)] = Complex64::new(t, 0.0);
    }
    split * big
}

/// Internal vectors with ⟨x_i|x_j⟩ = S_ij from the eigendecomposition of S.
pub fn gram_vectors(s: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    let eig = SymmetricEigen::new(s.clone());
    let keep: Vec<usize> = (0..s.nrows())
        .filter(|&k| eig.eigenvalues[k] > 1e-12)
        .collect();
    (0..s.nrows())
        .map(|i| {
            keep.iter()
                .map(|&k| (eig.eigenvectors[(i, k)] * eig.eigenvalues[k].sqrt()).conj())
                .collect()
        })
        .collect()
}

/// Extra-photon weight w solving 2w/(1+w)² = g2, in closed form.
pub fn noise_weight(g2: f64) -> f64 {
    if g2 == 0.0 {
        return 0.0;
    }
    let b = 2.0 - 2.0 * g2;
    (b - (b * b - 4.0 * g2 * g2).sqrt()) / (2.0 * g2)
}

/// Incoherent source components: no noise photon, or one extra
/// distinguishable photon next to one of the sources, renormalised.
pub fn source_mixture(input: &FockState, gram: &ComplexMatrix, g2: f64) -> Vec<(f64, Vec<Photon>)> {
    let modes: Vec<usize> = input.photon_modes();
    let n = modes.len();
    let vectors = gram_vectors(gram);
    let q = vectors[0].len();
    let w = noise_weight(g2);
    let labels = if w > 0.0 { q + 1 } else { q };
    let principal: Vec<Photon> = modes
        .iter()
        .zip(&vectors)
        .map(|(&mode, v)| {
            let mut internal = v.clone();
            internal.resize(labels, Complex64::new(0.0, 0.0));
            Photon { mode, internal }
        })
        .collect();
    let mut out = vec![((1.0 - w).powi(n as i32), principal.clone())];
    if w > 0.0 {
        for &mode in &modes {
            let mut photons = principal.clone();
            let mut internal = vec![Complex64::new(0.0, 0.0); labels];
            internal[q] = Complex64::new(1.0, 0.0);
            photons.push(Photon { mode, internal });
            out.push((w * (1.0 - w).powi(n as i32 - 1), photons));
        }
    }
    let total: f64 = out.iter().map(|(w, _)| w).sum();
    out.into_iter().map(|(w, p)| (w / total, p)).collect()
}

/// Detection statistics on the first `observed` modes under source noise,
/// uniform loss `eta` and per-mode detector efficiencies.
pub fn noisy_distribution(
    u: &ComplexMatrix,
    input: &FockState,
    gram: &ComplexMatrix,
    g2: f64,
    eta: f64,
    detectors: &[f64],
) -> BTreeMap<Vec<u8>, f64> {
    let m = u.nrows();
    let eff: Vec<f64> = (0..m)
        .map(|j| eta * detectors.get(j).copied().unwrap_or(1.0))
        .collect();
    let big = with_loss_modes(u, &eff);
    let mut out = BTreeMap::new();
    for (w, photons) in source_mixture(input, gram, g2) {
        for (occ, p) in mode_distribution(&big, &photons) {
            *out.entry(occ[..m].to_vec()).or_insert(0.0) += w * p;
        }
    }
    out
}

/// Unnormalised rail density matrix: the first `observed` modes must show
/// `target` off the rails and exactly one photon on the rails; every other
/// mode and all internal labels are traced out.
pub fn rail_state(
    u: &ComplexMatrix,
    photons: &[Photon],
    observed: usize,
    target: &[u8],
    rails: &[usize],
) -> ComplexMatrix {
    let ev = Evolved::new(u, photons);
    let d = rails.len();
    let mut rho = ComplexMatrix::zeros(d, d);
    ev.for_each_tuple(|t| {
        let mut occ = vec![0u8; observed];
        let mut rail_hit = None;
        let mut rail_count = 0;
        for (pos, &i) in t.iter().enumerate() {
            let mode = ev.mode_of(i);
            if mode >= observed {
                continue;
            }
            if let Some(b) = rails.iter().position(|&r| r == mode) {
                rail_count += 1;
                rail_hit = Some((pos, b));
            } else {
                occ[mode] += 1;
            }
        }
        if rail_count != 1 || occ != target {
            return;
        }
        let (pos, b) = rail_hit.expect("one rail photon");
        let a = ev.amplitude(t);
        if a.norm_sqr() == 0.0 {
            return;
        }
        let label = t[pos] % ev.labels;
        let mut moved = t.to_vec();
        for (b2, &rail) in rails.iter().enumerate() {
            moved[pos] = rail * ev.labels + label;
            rho[(b, b2)] += a * ev.amplitude(&moved).conj();
        }
    });
    rho
}

/// Target occupations of the non-rail modes for outcome `index`.
pub fn outcome_target(scheme: &AbsScheme, index: usize) -> Vec<u8> {
    let cfg = scheme.config();
    let patterns = outcome_patterns(cfg.adaptive_modes.len(), cfg.r, cfg.allow_bunching);
    let mut target = vec![0u8; cfg.m];
    for (&mode, &o) in cfg.adaptive_modes.iter().zip(&patterns[index]) {
        target[mode] = o;
    }
    target
}

/// Ideal conditional rail state (probability, normalised ρ) of `index`.
pub fn ideal_conditional(scheme: &AbsScheme, index: usize) -> (f64, ComplexMatrix) {
    let cfg = scheme.config();
    let u = realized_unitary(scheme, index);
    let rho = rail_state(
        &u,
        &indistinguishable(&cfg.input),
        cfg.m,
        &outcome_target(scheme, index),
        &cfg.output_rails,
    );
    let p = rho.trace().re;
    (p, rho.unscale(p))
}

/// Noisy conditional rail state with uniform loss `eta` at every mode.
pub fn noisy_conditional(
    scheme: &AbsScheme,
    index: usize,
    gram: &ComplexMatrix,
    g2: f64,
    eta: f64,
) -> (f64, ComplexMatrix) {
    let cfg = scheme.config();
    let m = cfg.m;
    let u = realized_unitary(scheme, index);
    let (big, observed) = if eta < 1.0 {
        (with_loss_modes(&u, &vec![eta; m]), m)
    } else {
        (u, m)
    };
    let target = outcome_target(scheme, index);
    let d = cfg.output_rails.len();
    let mut rho = ComplexMatrix::zeros(d, d);
    for (w, photons) in source_mixture(&cfg.input, gram, g2) {
        rho += rail_state(&big, &photons, observed, &target, &cfg.output_rails).scale(w);
    }
    let p = rho.trace().re;
    (p, rho.unscale(p))
}

/// Trace norm distance ½‖a − b‖₁ of Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = a - b;
    let herm = (&diff + diff.adjoint()).scale(0.5);
    0.5 * SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
}

/// Maximum of the SVM dual Σα − ½ αᵀQα (Q_ij = y_i y_j K_ij) over
/// 0 ≤ α ≤ λ, Σ α_i y_i = 0, found by solving the stationarity system on
/// every split of the multipliers into {at 0, at λ, free}.
pub fn exhaustive_dual(k: &DMatrix<f64>, labels: &[i8], lambda: f64) -> (f64, Vec<f64>) {
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let objective = |a: &[f64]| {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * a[j] * q[(i, j)];
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { lambda } else { 0.0 })
            .collect();
        if !free.is_empty() {
            let f = free.len();
            let mut a = DMatrix::<f64>::zeros(f + 1, f + 1);
            let mut b = nalgebra::DVector::<f64>::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, f)] = y[i];
                a[(f, r)] = y[i];
                b[r] = 1.0
                    - (0..n)
                        .filter(|j| state[*j] == 1)
                        .map(|j| q[(i, j)] * lambda)
                        .sum::<f64>();
            }
            b[f] = -(0..n)
                .filter(|j| state[*j] == 1)
                .map(|j| y[j] * lambda)
                .sum::<f64>();
            let svd = a.clone().svd(true, true);
            let Ok(sol) = svd.solve(&b, 1e-12) else {
                continue;
            };
            if (&a * &sol - &b).amax() > 1e-8 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        if alpha.iter().any(|&v| v < -1e-12 || v > lambda + 1e-12) {
            continue;
        }
        if alpha.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() > 1e-9 {
            continue;
        }
        let value = objective(&alpha);
        if value > best.0 {
            best = (value, alpha);
        }
    }
    best
}

/// Random Gaussian-kernel SVM problem with both classes present.
pub fn random_svm_problem(rng: &mut impl Rng, n: usize) -> (DMatrix<f64>, Vec<i8>) {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
        .collect();
    let mut labels: Vec<i8> = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    labels[0] = 1;
    labels[1] = -1;
    let width = rng.random_range(0.3..2.0);
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d2 = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
        (-d2 / (2.0 * width * width)).exp()
    });
    (k, labels)
}

/// Random density matrix of rank `rank` (A·A† normalised).
pub fn random_density(rng: &mut impl Rng, d: usize, rank: usize) -> ComplexMatrix {
    let a = random_complex_matrix(rng, d, rank);
    let rho = &a * a.adjoint();
    let tr = rho.trace().re;
    rho.unscale(tr)
}

pub fn random_ket(rng: &mut impl Rng, d: usize) -> nalgebra::DVector<Complex64> {
    let v = nalgebra::DVector::from_fn(d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let n = v.norm();
    v.unscale(n)
}
