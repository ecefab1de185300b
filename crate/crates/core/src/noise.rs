//! Imperfect sources: partial distinguishability through a Gram matrix,
//! multiphoton emission, uniform loss and per-mode detector efficiency.
//!
//! Each photon carries an internal-state vector. Expanding the vectors over
//! an orthonormal internal basis turns the input into a superposition of
//! Fock states on (spatial mode × internal label); the interferometer acts
//! on every label independently.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::abs::AbsScheme;
use crate::error::{Error, Result};
use crate::fock::{binomial, enumerate_fock, output_amplitudes, FockState, OutputDistribution};
use crate::linalg::{c, hermiticity_error, min_eigenvalue, ComplexMatrix, ComplexVector};
use crate::qstate::DensityMatrix;

pub const GRAM_TOL: f64 = 1e-10;
pub const DEFAULT_PHOTON_CAP: usize = 6;
/// Largest g2 reachable with one extra photon per source.
pub const MAX_G2: f64 = 0.5;

/// Pairwise internal-state overlaps S_ij = ⟨ψ_i|ψ_j⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    overlaps: ComplexMatrix,
}

impl GramMatrix {
    pub fn new(overlaps: ComplexMatrix) -> Result<Self> {
        if !overlaps.is_square() {
            return Err(Error::Model(format!(
                "Gram matrix must be square, got {:?}",
                overlaps.shape()
            )));
        }
        let herr = hermiticity_error(&overlaps);
        if herr > GRAM_TOL {
            return Err(Error::Model(format!(
                "Gram matrix not Hermitian (error {herr:e})"
            )));
        }
        for i in 0..overlaps.nrows() {
            if (overlaps[(i, i)] - c(1.0, 0.0)).norm() > GRAM_TOL {
                return Err(Error::Model(format!(
                    "Gram diagonal entry {i} is {}",
                    overlaps[(i, i)]
                )));
            }
        }
        if overlaps.nrows() > 0 {
            let lowest = min_eigenvalue(&overlaps)?;
            if lowest < -GRAM_TOL {
                return Err(Error::Model(format!(
                    "Gram matrix not PSD (eigenvalue {lowest:e})"
                )));
            }
        }
        Ok(GramMatrix { overlaps })
    }

    /// Fully distinguishable photons.
    pub fn identity(n: usize) -> Self {
        GramMatrix {
            overlaps: ComplexMatrix::identity(n, n),
        }
    }

    /// Perfectly indistinguishable photons.
    pub fn indistinguishable(n: usize) -> Self {
        GramMatrix {
            overlaps: ComplexMatrix::from_element(n, n, c(1.0, 0.0)),
        }
    }

    /// Real overlap sqrt(visibility) between every pair.
    pub fn uniform(n: usize, visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::Model(format!(
                "visibility {visibility} outside [0, 1]"
            )));
        }
        let s = visibility.sqrt();
        Self::new(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(1.0, 0.0)
            } else {
                c(s, 0.0)
            }
        }))
    }

    pub fn n(&self) -> usize {
        self.overlaps.nrows()
    }

    pub fn overlaps(&self) -> &ComplexMatrix {
        &self.overlaps
    }
}

/// Gram entries are written as plain numbers when real, `[re, im]` otherwise.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GramEntry {
    Real(f64),
    Complex([f64; 2]),
}

impl Serialize for GramMatrix {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n();
        let rows: Vec<Vec<GramEntry>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let z = self.overlaps[(i, j)];
                        if z.im == 0.0 {
                            GramEntry::Real(z.re)
                        } else {
                            GramEntry::Complex([z.re, z.im])
                        }
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GramMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rows = Vec::<Vec<GramEntry>>::deserialize(deserializer)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(D::Error::custom("gram must be a square array"));
        }
        let m = ComplexMatrix::from_fn(n, n, |i, j| match rows[i][j] {
            GramEntry::Real(x) => c(x, 0.0),
            GramEntry::Complex([re, im]) => c(re, im),
        });
        GramMatrix::new(m).map_err(D::Error::custom)
    }
}

fn default_cap() -> usize {
    DEFAULT_PHOTON_CAP
}

fn default_noise_photons() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub gram: GramMatrix,
    pub g2: f64,
    /// Survival probability of every photon, applied at the source.
    pub eta: f64,
    /// Per-output-mode detection efficiency; empty means perfect detectors.
    #[serde(default)]
    pub detector_eta: Vec<f64>,
    /// Most noise photons kept per event; the rest of the branch weight is
    /// renormalised away.
    #[serde(default = "default_noise_photons")]
    pub max_noise_photons: usize,
    /// Largest photon number after adding noise photons.
    #[serde(default = "default_cap")]
    pub photon_cap: usize,
}

impl NoiseModel {
    pub fn ideal(n: usize) -> Self {
        NoiseModel {
            gram: GramMatrix::indistinguishable(n),
            g2: 0.0,
            eta: 1.0,
            detector_eta: Vec::new(),
            max_noise_photons: 1,
            photon_cap: DEFAULT_PHOTON_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_G2).contains(&self.g2) {
            return Err(Error::Model(format!(
                "g2 = {} outside the reachable range [0, {MAX_G2}]",
                self.g2
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Model(format!("eta = {} outside (0, 1]", self.eta)));
        }
        if let Some(bad) = self.detector_eta.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Model(format!(
                "detector efficiency {bad} outside (0, 1]"
            )));
        }
        Ok(())
    }

    pub fn detector_efficiency(&self, mode: usize) -> f64 {
        self.detector_eta.get(mode).copied().unwrap_or(1.0)
    }

    fn check_detectors(&self, m: usize) -> Result<()> {
        if !self.detector_eta.is_empty() && self.detector_eta.len() != m {
            return Err(Error::Model(format!(
                "{} detector efficiencies for {m} modes",
                self.detector_eta.len()
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: NoiseModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Internal-state vectors with pairwise overlaps S, from a semidefinite
/// Cholesky factorisation S = L·L†. Photon `i` gets conj(row i of L);
/// columns with a vanishing pivot are dropped.
pub fn internal_decomposition(gram: &GramMatrix) -> Result<Vec<ComplexVector>> {
    let s = gram.overlaps();
    let n = gram.n();
    let mut l = ComplexMatrix::zeros(n, n);
    let mut kept = Vec::new();
    for j in 0..n {
        let pivot = s[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if pivot < -GRAM_TOL {
            return Err(Error::Model(format!(
                "Gram matrix not PSD at pivot {j} ({pivot:e})"
            )));
        }
        if pivot <= 1e-13 {
            continue;
        }
        let root = pivot.sqrt();
        l[(j, j)] = c(root, 0.0);
        for i in j + 1..n {
            let acc: Complex64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (s[(i, j)] - acc) / root;
        }
        kept.push(j);
    }
    let vectors: Vec<ComplexVector> = (0..n)
        .map(|i| ComplexVector::from_iterator(kept.len(), kept.iter().map(|&k| l[(i, k)].conj())))
        .collect();
    for i in 0..n {
        for j in 0..n {
            let err = (vectors[i].dotc(&vectors[j]) - s[(i, j)]).norm();
            if err > 1e-9 {
                return Err(Error::Model(format!(
                    "Gram matrix not PSD: overlap ({i}, {j}) off by {err:e}"
                )));
            }
        }
    }
    Ok(vectors)
}

/// g2 of a source emitting one extra photon with probability `w`.
pub fn branch_g2(w: f64) -> f64 {
    2.0 * w / ((1.0 + w) * (1.0 + w))
}

/// Extra-photon probability `w` with `branch_g2(w) = g2`, by bisection to
/// full precision.
pub fn noise_branch_weight(g2: f64) -> Result<f64> {
    if !(0.0..=MAX_G2).contains(&g2) {
        return Err(Error::Model(format!("g2 = {g2} outside [0, {MAX_G2}]")));
    }
    if g2 == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if branch_g2(mid) < g2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// HOM dip visibility 2RT|S|²/(R² + T²) for two photons with overlap `s`
/// on a splitter of reflectivity R (T = 1 − R).
pub fn hom_visibility(s: Complex64, reflectivity: f64) -> f64 {
    let r = reflectivity;
    let t = 1.0 - r;
    let denom = r * r + t * t;
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * r * t * s.norm_sqr() / denom
}

/// A photon entering the interferometer: spatial mode and internal state.
#[derive(Debug, Clone)]
pub struct LabeledPhoton {
    pub mode: usize,
    pub internal: ComplexVector,
}

/// One incoherent component of the source: photons and its weight.
#[derive(Debug, Clone)]
pub struct SourceBranch {
    pub weight: f64,
    pub photons: Vec<LabeledPhoton>,
}

/// Every (noise branch × loss pattern) component of the input, with weights
/// summing to one. Noise photons sit in their source's mode with an internal
/// label orthogonal to everything else.
pub fn source_branches(input: &FockState, model: &NoiseModel) -> Result<Vec<SourceBranch>> {
    model.validate()?;
    let modes = input.photon_modes();
    let n = modes.len();
    if model.gram.n() != n {
        return Err(Error::Model(format!(
            "Gram matrix is {}x{} but the input carries {n} photons",
            model.gram.n(),
            model.gram.n()
        )));
    }
    if input.occupations().iter().any(|&o| o > 1) {
        return Err(Error::Model(
            "noisy inputs need at most one photon per mode".into(),
        ));
    }
    let principal = internal_decomposition(&model.gram)?;
    let q = principal.first().map_or(0, |v| v.len());

    let w = noise_branch_weight(model.g2)?;
    let max_noise = if w > 0.0 {
        model.max_noise_photons.min(n)
    } else {
        0
    };
    let needed = n + max_noise;
    if needed > model.photon_cap {
        return Err(Error::Capacity {
            needed,
            cap: model.photon_cap,
        });
    }

    // noise patterns: subsets of sources with an extra photon, up to max_noise
    let mut noise_sets: Vec<(f64, Vec<usize>)> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if chosen.len() > max_noise {
            continue;
        }
        let weight = w.powi(chosen.len() as i32) * (1.0 - w).powi((n - chosen.len()) as i32);
        noise_sets.push((weight, chosen));
    }
    let norm: f64 = noise_sets.iter().map(|(wt, _)| wt).sum();

    let mut branches = Vec::new();
    for (weight, noisy) in noise_sets {
        let dim = q + noisy.len();
        let mut photons: Vec<LabeledPhoton> = (0..n)
            .map(|i| {
                let mut v = ComplexVector::zeros(dim);
                v.rows_mut(0, q).copy_from(&principal[i]);
                LabeledPhoton {
                    mode: modes[i],
                    internal: v,
                }
            })
            .collect();
        for (extra, &src) in noisy.iter().enumerate() {
            let mut v = ComplexVector::zeros(dim);
            v[q + extra] = c(1.0, 0.0);
            photons.push(LabeledPhoton {
                mode: modes[src],
                internal: v,
            });
        }
        // uniform loss at the source
        let total = photons.len();
        for keep in 0u32..(1u32 << total) {
            let survivors = keep.count_ones() as i32;
            let p_loss =
                model.eta.powi(survivors) * (1.0 - model.eta).powi(total as i32 - survivors);
            if p_loss == 0.0 {
                continue;
            }
            let kept: Vec<LabeledPhoton> = (0..total)
                .filter(|i| keep & (1 << i) != 0)
                .map(|i| photons[i].clone())
                .collect();
            branches.push(SourceBranch {
                weight: weight / norm * p_loss,
                photons: kept,
            });
        }
    }
    Ok(branches)
}

/// Calls `visit(outputs, amplitude)` for every output configuration with a
/// non-zero amplitude, where `outputs[λ]` is the spatial Fock state of the
/// photons carrying internal label λ.
pub fn evolve_labeled<F>(u: &ComplexMatrix, photons: &[LabeledPhoton], mut visit: F) -> Result<()>
where
    F: FnMut(&[FockState], Complex64),
{
    let m = u.nrows();
    let q = photons.first().map_or(0, |p| p.internal.len());
    if photons.iter().any(|p| p.internal.len() != q || p.mode >= m) {
        return Err(Error::Model(
            "photons disagree on internal dimension or mode range".into(),
        ));
    }
    if photons.is_empty() {
        visit(&vec![FockState::vacuum(m); q.max(1)], c(1.0, 0.0));
        return Ok(());
    }

    // label assignments grouped by how many photons each label receives
    struct Term {
        coef: Complex64,
        amps: Vec<Vec<Complex64>>,
    }
    let mut classes: BTreeMap<Vec<usize>, Vec<Term>> = BTreeMap::new();
    let support: Vec<Vec<usize>> = photons
        .iter()
        .map(|p| (0..q).filter(|&a| p.internal[a].norm() > 0.0).collect())
        .collect();
    let mut labels = vec![0usize; photons.len()];
    let mut cursor = vec![0usize; photons.len()];
    'outer: loop {
        for (i, s) in support.iter().enumerate() {
            labels[i] = s[cursor[i]];
        }
        let mut coef = c(1.0, 0.0);
        let mut occupations = vec![vec![0u8; m]; q];
        let mut counts = vec![0usize; q];
        for (p, &a) in photons.iter().zip(&labels) {
            coef *= p.internal[a];
            occupations[a][p.mode] += 1;
            counts[a] += 1;
        }
        // ∏ a† |0⟩ = sqrt(∏ occ!) |occ⟩
        let norm: f64 = occupations
            .iter()
            .flatten()
            .map(|&o| crate::fock::factorial(o as usize))
            .product();
        coef *= norm.sqrt();
        let amps = occupations
            .into_iter()
            .map(|occ| {
                output_amplitudes(u, &FockState::new(occ))
                    .map(|v| v.into_iter().map(|(_, a)| a).collect())
            })
            .collect::<Result<Vec<Vec<Complex64>>>>()?;
        classes.entry(counts).or_default().push(Term { coef, amps });

        for i in 0..photons.len() {
            cursor[i] += 1;
            if cursor[i] < support[i].len() {
                continue 'outer;
            }
            cursor[i] = 0;
        }
        break;
    }

    for (counts, terms) in &classes {
        let bases: Vec<Vec<FockState>> = counts.iter().map(|&k| enumerate_fock(m, k)).collect();
        let sizes: Vec<usize> = bases.iter().map(Vec::len).collect();
        let mut idx = vec![0usize; q];
        let mut outputs: Vec<FockState> = bases.iter().map(|b| b[0].clone()).collect();
        'product: loop {
            let amp: Complex64 = terms
                .iter()
                .map(|t| {
                    t.coef
                        * idx
                            .iter()
                            .enumerate()
                            .map(|(a, &j)| t.amps[a][j])
                            .product::<Complex64>()
                })
                .sum();
            if amp.norm_sqr() > 0.0 {
                visit(&outputs, amp);
            }
            for a in 0..q {
                idx[a] += 1;
                if idx[a] < sizes[a] {
                    outputs[a] = bases[a][idx[a]].clone();
                    continue 'product;
                }
                idx[a] = 0;
                outputs[a] = bases[a][0].clone();
            }
            break;
        }
    }
    Ok(())
}

/// Detected photon-count distribution; the photon number varies between
/// entries because of loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionDistribution {
    pub entries: BTreeMap<FockState, f64>,
}

impl DetectionDistribution {
    pub fn probability(&self, t: &FockState) -> f64 {
        self.entries.get(t).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Entries carrying exactly `n` photons.
    pub fn sector(&self, n: usize) -> OutputDistribution {
        OutputDistribution {
            total_n: n,
            entries: self
                .entries
                .iter()
                .filter(|(t, _)| t.photons() == n)
                .map(|(t, &p)| (t.clone(), p))
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("occupations,probability\n");
        for (t, p) in &self.entries {
            out.push_str(&format!("{t},{p:.17e}\n"));
        }
        out
    }
}

fn spatial_sum(outputs: &[FockState], m: usize) -> Vec<u8> {
    let mut occ = vec![0u8; m];
    for s in outputs {
        for (o, &x) in occ.iter_mut().zip(s.occupations()) {
            *o += x;
        }
    }
    occ
}

/// Probability that `detected` is registered when `present` photons reach
/// the detectors.
fn thinning_probability(present: &[u8], detected: &[u8], model: &NoiseModel) -> f64 {
    present
        .iter()
        .zip(detected)
        .enumerate()
        .map(|(mode, (&n, &k))| {
            if k > n {
                return 0.0;
            }
            let e = model.detector_efficiency(mode);
            binomial(n as usize, k as usize) as f64
                * e.powi(k as i32)
                * (1.0 - e).powi((n - k) as i32)
        })
        .product()
}

fn thinned_patterns(present: &[u8]) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::with_capacity(present.len())];
    for &n in present {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=n).map(move |k| {
                    let mut p = prefix.clone();
                    p.push(k);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn noisy_output_distribution(
    u: &ComplexMatrix,
    input: &FockState,
    model: &NoiseModel,
) -> Result<DetectionDistribution> {
    let m = u.nrows();
    if input.modes() != m {
        return Err(Error::Dimension(format!(
            "input has {} modes, unitary has {m}",
            input.modes()
        )));
    }
    model.check_detectors(m)?;
    let mut spatial: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for branch in source_branches(input, model)? {
        evolve_labeled(u, &branch.photons, |outputs, amp| {
            *spatial.entry(spatial_sum(outputs, m)).or_default() += branch.weight * amp.norm_sqr();
        })?;
    }
    let mut dist = DetectionDistribution::default();
    for (present, p) in spatial {
        for detected in thinned_patterns(&present) {
            let w = thinning_probability(&present, &detected, model);
            if w > 0.0 {
                *dist.entries.entry(FockState::new(detected)).or_default() += p * w;
            }
        }
    }
    Ok(dist)
}

/// Conditional rail state of outcome `index` under the noise model.
///
/// Non-rail modes are thinned by their detector efficiencies; the rail
/// efficiencies scale the rail amplitudes. Events with more than one photon
/// on the rails are discarded, and the internal label of the rail photon
/// is traced out.
pub fn noisy_conditional_state(
    scheme: &AbsScheme,
    index: usize,
    model: &NoiseModel,
) -> Result<(f64, DensityMatrix)> {
    if scheme.n() - scheme.r() != 1 {
        return Err(Error::Precondition(format!(
            "noisy conditional states need one photon on the rails, scheme leaves {}",
            scheme.n() - scheme.r()
        )));
    }
    let m = scheme.m();
    model.check_detectors(m)?;
    let config = scheme.config();
    let rails = &config.output_rails;
    let mut rail_index = vec![None; m];
    for (b, &mode) in rails.iter().enumerate() {
        rail_index[mode] = Some(b);
    }
    let mut target = vec![0u8; m];
    for (&mode, &o) in config
        .adaptive_modes
        .iter()
        .zip(&scheme.outcomes()[index].pattern)
    {
        target[mode] = o;
    }
    let d = rails.len();
    let u = scheme.realized_unitary(index)?;

    let mut rho = ComplexMatrix::zeros(d, d);
    for branch in source_branches(&config.input, model)? {
        // environment key: non-rail occupations per label, plus the rail label
        let mut columns: BTreeMap<(Vec<Vec<u8>>, usize), (f64, ComplexVector)> = BTreeMap::new();
        evolve_labeled(&u, &branch.photons, |outputs, amp| {
            let mut rail_hit = None;
            let mut rail_photons = 0;
            let mut env: Vec<Vec<u8>> = Vec::with_capacity(outputs.len());
            for (label, s) in outputs.iter().enumerate() {
                let mut occ = s.occupations().to_vec();
                for (mode, o) in occ.iter_mut().enumerate() {
                    if let Some(b) = rail_index[mode] {
                        if *o > 0 {
                            rail_photons += *o as usize;
                            rail_hit = Some((b, label));
                        }
                        *o = 0;
                    }
                }
                env.push(occ);
            }
            let Some((b, label)) = rail_hit else { return };
            if rail_photons != 1 {
                return;
            }
            let present = spatial_sum(
                &env.iter()
                    .map(|o| FockState::new(o.clone()))
                    .collect::<Vec<_>>(),
                m,
            );
            let w = thinning_probability(&present, &target, model);
            if w == 0.0 {
                return;
            }
            let entry = columns
                .entry((env, label))
                .or_insert_with(|| (w, ComplexVector::zeros(d)));
            entry.1[b] += amp * model.detector_efficiency(rails[b]).sqrt();
        })?;
        for (w, col) in columns.values() {
            rho += (col * col.adjoint()).scale(branch.weight * w);
        }
    }
    let probability = rho.trace().re;
    if probability < crate::abs::ZERO_SUPPORT_TOL {
        return Err(Error::ZeroSupport(format!(
            "outcome {index} ({}) has probability {probability:e} under the noise model",
            scheme.outcomes()[index]
        )));
    }
    Ok((
        probability,
        DensityMatrix::from_matrix_unchecked(rho.unscale(probability)),
    ))
}

/// Noisy states for every outcome of the scheme.
pub fn noisy_states(scheme: &AbsScheme, model: &NoiseModel) -> Result<Vec<DensityMatrix>> {
    (0..scheme.outcome_count())
        .map(|i| noisy_conditional_state(scheme, i, model).map(|(_, rho)| rho))
        .collect()
}
