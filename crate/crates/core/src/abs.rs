//! Adaptive schemes: outcome enumeration, adaptive rules, post-selected
//! conditional states and kernels built from them.
//!
//! An outcome is the photon pattern seen on the adaptive modes. Outcome `i`
//! programs the adaptive slots with the rule evaluated for rule index
//! `assignment[i]`; the remaining photons are read out on the rails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{binomial, enumerate_fock, transition_amplitude, FockState};
use crate::interferometer::{mesh_to_unitary, MeshProgram};
use crate::kernel::KernelMatrix;
use crate::linalg::{unitary_mapping_to_first, ComplexMatrix, ComplexVector};
use crate::qstate::DensityMatrix;
use crate::seed;

/// Post-selection probabilities below this make an outcome unusable.
pub const ZERO_SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleFamily {
    CascadePiHalf,
    GaussianB2,
    GaussianB3,
    ExplicitTable,
}

/// Per-family constants. Unset fields take the family default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleParameters {
    /// Cascade: slot `s` also counts the photon on adaptive mode `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusive: Option<bool>,
    /// Cascade: fixed phase for every slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Gaussian: row width of the pair index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<usize>,
    /// Gaussian: divisor turning the pair index into an angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Gaussian B3: index of the first bunched outcome.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bunched_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRule {
    pub family: RuleFamily,
    #[serde(default)]
    pub parameters: RuleParameters,
    /// Explicit table: one entry per rule index, each either a single
    /// (θ, φ) for every slot or one pair per slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<(f64, f64)>>>,
}

impl AdaptiveRule {
    pub fn cascade() -> Self {
        AdaptiveRule {
            family: RuleFamily::CascadePiHalf,
            parameters: RuleParameters::default(),
            table: None,
        }
    }

    pub fn gaussian_b2() -> Self {
        AdaptiveRule {
            family: RuleFamily::GaussianB2,
            parameters: RuleParameters::default(),
            table: None,
        }
    }

    pub fn gaussian_b3() -> Self {
        AdaptiveRule {
            family: RuleFamily::GaussianB3,
            parameters: RuleParameters::default(),
            table: None,
        }
    }

    pub fn explicit(table: Vec<Vec<(f64, f64)>>) -> Self {
        AdaptiveRule {
            family: RuleFamily::ExplicitTable,
            parameters: RuleParameters::default(),
            table: Some(table),
        }
    }

    fn span(&self) -> usize {
        self.parameters.span.unwrap_or(match self.family {
            RuleFamily::GaussianB3 => 4,
            _ => 5,
        })
    }

    fn scale(&self) -> f64 {
        self.parameters.scale.unwrap_or(5.0)
    }

    /// Pair index of the Gaussian families; 1-based over admissible outcomes.
    pub fn gaussian_index(&self, outcome: &Outcome) -> Result<f64> {
        let positions = outcome.photon_positions();
        match (self.family, positions.as_slice()) {
            (RuleFamily::GaussianB2 | RuleFamily::GaussianB3, &[low, high]) if low != high => {
                Ok(high as f64
                    + (1..=low)
                        .map(|t| self.span() as f64 - t as f64)
                        .sum::<f64>())
            }
            (RuleFamily::GaussianB3, &[j, _]) => {
                Ok(self.parameters.bunched_offset.unwrap_or(11.0) + j as f64)
            }
            (RuleFamily::GaussianB2 | RuleFamily::GaussianB3, _) => Err(Error::InvalidInput(
                format!("outcome {outcome} is not admissible for {:?}", self.family),
            )),
            _ => Err(Error::InvalidInput("not a Gaussian rule".into())),
        }
    }

    /// Angles for every adaptive slot when the rule is evaluated at
    /// `rule_index`, whose outcome pattern is `outcome`.
    pub fn angles(
        &self,
        rule_index: usize,
        outcome: &Outcome,
        slot_count: usize,
    ) -> Result<Vec<(f64, f64)>> {
        match self.family {
            RuleFamily::CascadePiHalf => {
                let lead = usize::from(self.parameters.inclusive.unwrap_or(false));
                let phi = self.parameters.phi.unwrap_or(FRAC_PI_4);
                Ok((0..slot_count)
                    .map(|s| {
                        let before: u32 = outcome
                            .pattern
                            .iter()
                            .take(s + lead)
                            .map(|&o| o as u32)
                            .sum();
                        (FRAC_PI_2 * before as f64, phi)
                    })
                    .collect())
            }
            RuleFamily::GaussianB2 | RuleFamily::GaussianB3 => {
                let angle = self.gaussian_index(outcome)? / self.scale();
                Ok(vec![(angle, angle); slot_count])
            }
            RuleFamily::ExplicitTable => {
                let entry = self
                    .table
                    .as_ref()
                    .and_then(|t| t.get(rule_index))
                    .ok_or_else(|| {
                        Error::IncompleteRule(format!("no table entry for outcome {rule_index}"))
                    })?;
                match entry.len() {
                    1 => Ok(vec![entry[0]; slot_count]),
                    n if n == slot_count => Ok(entry.clone()),
                    n => Err(Error::IncompleteRule(format!(
                        "table entry {rule_index} has {n} angle pairs for {slot_count} slots"
                    ))),
                }
            }
        }
    }
}

/// (k + Σ_{t=1}^{j} (span − t)) / scale, evaluated as written.
pub fn gaussian_pair_angle(k: usize, j: usize, span: usize, scale: f64) -> f64 {
    (k as f64 + (1..=j).map(|t| span as f64 - t as f64).sum::<f64>()) / scale
}

/// See [`AdaptiveRule::angles`].
pub fn adaptive_angles(
    rule: &AdaptiveRule,
    rule_index: usize,
    outcome: &Outcome,
    slot_count: usize,
) -> Result<Vec<(f64, f64)>> {
    rule.angles(rule_index, outcome, slot_count)
}

/// Occupations of the adaptive modes, in `adaptive_modes` order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome {
    pub pattern: Vec<u8>,
}

impl Outcome {
    pub fn photons(&self) -> usize {
        self.pattern.iter().map(|&o| o as usize).sum()
    }

    /// Adaptive-mode index of each detected photon, ascending, repeated
    /// for bunched photons.
    pub fn photon_positions(&self) -> Vec<usize> {
        self.pattern
            .iter()
            .enumerate()
            .flat_map(|(i, &o)| std::iter::repeat_n(i, o as usize))
            .collect()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pattern.iter().map(|o| o.to_string()).collect();
        write!(f, "{}", parts.join("|"))
    }
}

/// Serialized form of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub m: usize,
    pub n: usize,
    pub input: FockState,
    pub adaptive_modes: Vec<usize>,
    pub r: usize,
    pub output_rails: Vec<usize>,
    #[serde(default)]
    pub allow_bunching: bool,
    pub rule: AdaptiveRule,
    pub base_mesh: MeshProgram,
    pub adaptive_slots: Vec<usize>,
    /// Empty means identity.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assignment: Vec<usize>,
    /// Declared qudit dimension, checked if present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Declared outcome count, checked if present.
    #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
    pub outcome_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

/// Validated, immutable scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeConfig", into = "SchemeConfig")]
pub struct AbsScheme {
    config: SchemeConfig,
    outcomes: Vec<Outcome>,
    rail_basis: Vec<FockState>,
    assignment: Vec<usize>,
}

impl TryFrom<SchemeConfig> for AbsScheme {
    type Error = Error;
    fn try_from(config: SchemeConfig) -> Result<Self> {
        AbsScheme::new(config)
    }
}

impl From<AbsScheme> for SchemeConfig {
    fn from(s: AbsScheme) -> Self {
        s.config
    }
}

fn check_mode_list(field: &str, modes: &[usize], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for &mode in modes {
        if mode >= m {
            return Err(Error::config(
                field,
                format!("mode {mode} out of range for m = {m}"),
            ));
        }
        if std::mem::replace(&mut seen[mode], true) {
            return Err(Error::config(field, format!("mode {mode} listed twice")));
        }
    }
    Ok(())
}

pub(crate) fn check_permutation(perm: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if perm.len() != len {
        return Err(Error::Assignment(format!(
            "{} entries for {len} outcomes",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= len || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Assignment(format!(
                "{perm:?} is not a permutation of 0..{len}"
            )));
        }
    }
    Ok(())
}

impl AbsScheme {
    pub fn new(config: SchemeConfig) -> Result<Self> {
        let m = config.m;
        if m == 0 {
            return Err(Error::config("m", "need at least one mode"));
        }
        if config.input.modes() != m {
            return Err(Error::config(
                "input",
                format!("{} modes listed, scheme has m = {m}", config.input.modes()),
            ));
        }
        if config.input.photons() != config.n {
            return Err(Error::config(
                "n",
                format!(
                    "input carries {} photons, n = {}",
                    config.input.photons(),
                    config.n
                ),
            ));
        }
        if config.r > config.n {
            return Err(Error::config(
                "r",
                format!("r = {} exceeds n = {}", config.r, config.n),
            ));
        }
        check_mode_list("adaptive_modes", &config.adaptive_modes, m)?;
        check_mode_list("output_rails", &config.output_rails, m)?;
        if config.output_rails.is_empty() {
            return Err(Error::config("output_rails", "no rails"));
        }
        if config.output_rails.len() > m - config.adaptive_modes.len().min(m) {
            return Err(Error::config(
                "output_rails",
                "more rails than non-adaptive modes",
            ));
        }
        if let Some(mode) = config
            .adaptive_modes
            .iter()
            .find(|a| config.output_rails.contains(a))
        {
            return Err(Error::config(
                "output_rails",
                format!("mode {mode} is both adaptive and a rail"),
            ));
        }
        if config.r > 0 && config.adaptive_modes.is_empty() {
            return Err(Error::config(
                "adaptive_modes",
                "r > 0 needs adaptive modes",
            ));
        }
        if config.base_mesh.m != m {
            return Err(Error::config(
                "base_mesh",
                format!("mesh has {} modes, scheme has m = {m}", config.base_mesh.m),
            ));
        }
        config
            .base_mesh
            .validate()
            .map_err(|e| Error::config("base_mesh", e.to_string()))?;
        let cell_count = config.base_mesh.cells.len();
        let mut seen = vec![false; cell_count];
        for &slot in &config.adaptive_slots {
            if slot >= cell_count || std::mem::replace(&mut seen[slot], true) {
                return Err(Error::config(
                    "adaptive_slots",
                    format!("slot {slot} is out of range or repeated ({cell_count} cells)"),
                ));
            }
        }

        let k = config.adaptive_modes.len();
        let outcomes: Vec<Outcome> = enumerate_fock(k, config.r)
            .into_iter()
            .filter(|s| config.allow_bunching || s.occupations().iter().all(|&o| o <= 1))
            .map(|s| Outcome { pattern: s.0 })
            .collect();
        let d_count = outcomes.len();
        let expected = if config.allow_bunching {
            binomial(k + config.r.max(1) - 1, config.r)
        } else {
            binomial(k, config.r)
        };
        debug_assert!(config.r == 0 || d_count == expected);
        if let Some(declared) = config.outcome_count {
            if declared != d_count {
                return Err(Error::config(
                    "D",
                    format!("declared {declared}, scheme admits {d_count}"),
                ));
            }
        }
        let rail_photons = config.n - config.r;
        let rail_basis = enumerate_fock(config.output_rails.len(), rail_photons);
        if let Some(declared) = config.d {
            if declared != rail_basis.len() {
                return Err(Error::config(
                    "d",
                    format!("declared {declared}, rails encode {}", rail_basis.len()),
                ));
            }
        }

        match config.rule.family {
            RuleFamily::GaussianB2 | RuleFamily::GaussianB3 if config.r != 2 => {
                return Err(Error::config("rule", "Gaussian rules need r = 2"));
            }
            RuleFamily::GaussianB2 if config.allow_bunching => {
                return Err(Error::config("rule", "gaussian_b2 has no bunched outcomes"));
            }
            RuleFamily::ExplicitTable => {
                let entries = config.rule.table.as_ref().map_or(0, Vec::len);
                if entries < d_count {
                    return Err(Error::IncompleteRule(format!(
                        "table covers {entries} of {d_count} outcomes"
                    )));
                }
            }
            _ => {}
        }

        let assignment = if config.assignment.is_empty() {
            (0..d_count).collect()
        } else {
            check_permutation(&config.assignment, d_count)?;
            config.assignment.clone()
        };

        let scheme = AbsScheme {
            config,
            outcomes,
            rail_basis,
            assignment,
        };
        for i in 0..d_count {
            scheme.slot_angles(i)?;
        }
        Ok(scheme)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: SchemeConfig = serde_json::from_str(text)?;
        Self::new(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.config)?)
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn r(&self) -> usize {
        self.config.r
    }

    pub fn k(&self) -> usize {
        self.config.adaptive_modes.len()
    }

    /// Qudit dimension.
    pub fn d(&self) -> usize {
        self.rail_basis.len()
    }

    /// Number of admissible outcomes.
    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn rail_basis(&self) -> &[FockState] {
        &self.rail_basis
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn outcome_labels(&self) -> Vec<String> {
        self.outcomes.iter().map(|o| o.to_string()).collect()
    }

    fn check_outcome(&self, index: usize) -> Result<()> {
        if index >= self.outcomes.len() {
            return Err(Error::InvalidInput(format!(
                "outcome {index} out of range ({} outcomes)",
                self.outcomes.len()
            )));
        }
        Ok(())
    }

    /// Slot angles programmed when outcome `index` is observed.
    pub fn slot_angles(&self, index: usize) -> Result<Vec<(f64, f64)>> {
        self.check_outcome(index)?;
        let rule_index = self.assignment[index];
        self.config.rule.angles(
            rule_index,
            &self.outcomes[rule_index],
            self.config.adaptive_slots.len(),
        )
    }

    /// Base mesh with the adaptive slots programmed for outcome `index`.
    pub fn realized_mesh(&self, index: usize) -> Result<MeshProgram> {
        let angles = self.slot_angles(index)?;
        let mut mesh = self.config.base_mesh.clone();
        for (&slot, &(theta, phi)) in self.config.adaptive_slots.iter().zip(&angles) {
            mesh.cells[slot].set_angles(theta, phi);
        }
        Ok(mesh)
    }

    pub fn realized_unitary(&self, index: usize) -> Result<ComplexMatrix> {
        mesh_to_unitary(&self.realized_mesh(index)?)
    }

    /// Full output configuration: `pattern` on the adaptive modes, `rails`
    /// on the rail modes, vacuum elsewhere.
    pub fn joint_output(&self, pattern: &[u8], rails: &FockState) -> FockState {
        let mut occ = vec![0u8; self.config.m];
        for (&mode, &o) in self.config.adaptive_modes.iter().zip(pattern) {
            occ[mode] = o;
        }
        for (&mode, &o) in self.config.output_rails.iter().zip(rails.occupations()) {
            occ[mode] = o;
        }
        FockState::new(occ)
    }

    /// Unnormalised rail amplitudes after `u`, post-selected on `pattern`.
    pub fn rail_amplitudes(&self, u: &ComplexMatrix, pattern: &[u8]) -> Result<ComplexVector> {
        let amps = self
            .rail_basis
            .iter()
            .map(|b| transition_amplitude(u, &self.config.input, &self.joint_output(pattern, b)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ComplexVector::from_vec(amps))
    }

    pub fn reassign(&self, permutation: &[usize]) -> Result<AbsScheme> {
        reassign_outcomes(self, permutation)
    }
}

pub fn enumerate_outcomes(scheme: &AbsScheme) -> Vec<Outcome> {
    scheme.outcomes().to_vec()
}

pub fn realized_unitary(scheme: &AbsScheme, index: usize) -> Result<ComplexMatrix> {
    scheme.realized_unitary(index)
}

/// Post-selection probability and normalised rail state for outcome `index`.
pub fn conditional_pure_state(scheme: &AbsScheme, index: usize) -> Result<(f64, ComplexVector)> {
    let u = scheme.realized_unitary(index)?;
    let psi = scheme.rail_amplitudes(&u, &scheme.outcomes()[index].pattern)?;
    let probability = psi.norm_squared();
    if probability < ZERO_SUPPORT_TOL {
        return Err(Error::ZeroSupport(format!(
            "outcome {index} ({}) has probability {probability:e}",
            scheme.outcomes()[index]
        )));
    }
    Ok((probability, psi.unscale(probability.sqrt())))
}

pub fn conditional_state(scheme: &AbsScheme, index: usize) -> Result<(f64, DensityMatrix)> {
    let (p, psi) = conditional_pure_state(scheme, index)?;
    Ok((p, DensityMatrix::from_pure(&psi)?))
}

pub fn ideal_pure_states(scheme: &AbsScheme) -> Result<Vec<ComplexVector>> {
    (0..scheme.outcome_count())
        .map(|i| conditional_pure_state(scheme, i).map(|(_, psi)| psi))
        .collect()
}

pub fn ideal_states(scheme: &AbsScheme) -> Result<Vec<DensityMatrix>> {
    ideal_pure_states(scheme)?
        .iter()
        .map(DensityMatrix::from_pure)
        .collect()
}

/// |⟨ψ_q|ψ_p⟩|² over all outcome pairs.
pub fn ideal_kernel(scheme: &AbsScheme) -> Result<KernelMatrix> {
    let states = ideal_pure_states(scheme)?;
    let n = states.len();
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            states[i].dotc(&states[j]).norm_sqr().min(1.0)
        }
    });
    KernelMatrix::new(values, scheme.outcome_labels())
}

/// Rail-restricted unitary that maps ψ onto the first rail basis state,
/// embedded in the full mode space.
fn rail_inverse_preparation(scheme: &AbsScheme, psi: &ComplexVector) -> Result<ComplexMatrix> {
    let w = unitary_mapping_to_first(psi)?;
    let rails = &scheme.config().output_rails;
    let mut full = ComplexMatrix::identity(scheme.m(), scheme.m());
    for (a, &ra) in rails.iter().enumerate() {
        for (b, &rb) in rails.iter().enumerate() {
            full[(ra, rb)] = w[(a, b)];
        }
    }
    Ok(full)
}

/// Kernel estimated by sampling: for each ordered pair (p, q) the circuit of
/// `p` is followed by the inverse preparation of `q` on the rails, and the
/// fraction of `shots` post-selected events landing on the first rail is
/// recorded. Estimates for (p, q) and (q, p) are averaged.
pub fn overlap_kernel(scheme: &AbsScheme, shots: u64, seed_root: u64) -> Result<KernelMatrix> {
    if shots == 0 {
        return Err(Error::InvalidInput(
            "overlap kernel needs at least one shot".into(),
        ));
    }
    if scheme.n() - scheme.r() != 1 {
        return Err(Error::Precondition(format!(
            "overlap estimation needs one photon on the rails, scheme leaves {}",
            scheme.n() - scheme.r()
        )));
    }
    let dim = scheme.outcome_count();
    let states = (0..dim)
        .map(|q| conditional_pure_state(scheme, q).map(|(_, psi)| psi))
        .collect::<Result<Vec<_>>>()?;
    let unitaries = (0..dim)
        .map(|p| scheme.realized_unitary(p))
        .collect::<Result<Vec<_>>>()?;
    let inverses = states
        .iter()
        .map(|psi| rail_inverse_preparation(scheme, psi))
        .collect::<Result<Vec<_>>>()?;

    let mut estimates = DMatrix::<f64>::identity(dim, dim);
    for p in 0..dim {
        let pattern = &scheme.outcomes()[p].pattern;
        for q in 0..dim {
            if p == q {
                continue;
            }
            let u = &inverses[q] * &unitaries[p];
            let amps = scheme.rail_amplitudes(&u, pattern)?;
            let total = amps.norm_squared();
            if total < ZERO_SUPPORT_TOL {
                return Err(Error::ZeroSupport(format!("overlap pair ({p}, {q})")));
            }
            let fraction = (amps[0].norm_sqr() / total).clamp(0.0, 1.0);
            let mut rng = seed::stream_rng(seed_root, seed::STREAM_OVERLAP, (p * dim + q) as u64);
            let hits = Binomial::new(shots, fraction)
                .map_err(|e| Error::InvalidInput(format!("binomial sampling: {e}")))?
                .sample(&mut rng);
            estimates[(p, q)] = hits as f64 / shots as f64;
        }
    }
    let values = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            1.0
        } else {
            0.5 * (estimates[(i, j)] + estimates[(j, i)])
        }
    });
    KernelMatrix::new(values, scheme.outcome_labels())
}

/// New scheme whose outcome `i` uses the rule index previously used by
/// outcome `permutation[i]`.
pub fn reassign_outcomes(scheme: &AbsScheme, permutation: &[usize]) -> Result<AbsScheme> {
    check_permutation(permutation, scheme.outcome_count())?;
    let mut config = scheme.config().clone();
    config.assignment = permutation
        .iter()
        .map(|&p| scheme.assignment()[p])
        .collect();
    AbsScheme::new(config)
}

/// `count` uniformly random permutations of [0, d), one seeded stream each.
pub fn random_permutations(d: usize, count: usize, seed_root: u64) -> Vec<Vec<usize>> {
    (0..count)
        .map(|i| {
            let mut rng = seed::stream_rng(seed_root, seed::STREAM_PERMUTATION, i as u64);
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(&mut rng);
            perm
        })
        .collect()
}

/// Total post-selection probability summed over outcomes.
pub fn total_post_selection_probability(scheme: &AbsScheme) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..scheme.outcome_count() {
        let u = scheme.realized_unitary(i)?;
        total += scheme
            .rail_amplitudes(&u, &scheme.outcomes()[i].pattern)?
            .norm_squared();
    }
    Ok(total)
}

/// Single-photon-on-the-rails scheme with `k = 0`; handy for tests.
pub fn trivial_scheme(m: usize, input_mode: usize, mesh: MeshProgram) -> Result<AbsScheme> {
    let mut occ = vec![0u8; m];
    occ[input_mode] = 1;
    AbsScheme::new(SchemeConfig {
        m,
        n: 1,
        input: FockState::new(occ),
        adaptive_modes: vec![],
        r: 0,
        output_rails: (0..m).collect(),
        allow_bunching: false,
        rule: AdaptiveRule::explicit(vec![vec![(0.0, 0.0)]]),
        base_mesh: mesh,
        adaptive_slots: vec![],
        assignment: vec![],
        d: None,
        outcome_count: None,
        notes: None,
    })
}
