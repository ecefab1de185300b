//! Fock-space machinery: basis enumeration, permanent-based transition
//! amplitudes, output distributions and multinomial sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{permanent, ComplexMatrix};
use crate::seed;

/// Occupation numbers over the optical modes. Ordering and hashing are
/// lexicographic on the occupation vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(pub Vec<u8>);

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Self {
        FockState(occupations)
    }

    pub fn vacuum(m: usize) -> Self {
        FockState(vec![0; m])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    /// Mode index of every photon, repeated by occupation.
    pub fn photon_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(mode, &k)| std::iter::repeat_n(mode, k as usize))
            .collect()
    }

    /// Π_i n_i!
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k as usize)).product()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join("|"))
    }
}

impl FromStr for FockState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .split('|')
            .map(|p| {
                p.trim()
                    .parse::<u8>()
                    .map_err(|e| Error::Parse(format!("bad occupation `{p}`: {e}")))
            })
            .collect::<Result<Vec<u8>>>()
            .map(FockState)
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// All states of `n` photons in `m` modes, C(m+n−1, n) of them.
///
/// Ordered lexicographically by the sorted list of occupied mode indices, so
/// for `m = 2, n = 1` the order is `(1,0), (0,1)`.
pub fn enumerate_fock(m: usize, n: usize) -> Vec<FockState> {
    if m == 0 {
        return if n == 0 {
            vec![FockState(Vec::new())]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::with_capacity(binomial(m + n - 1, n));
    let mut occ = vec![0u8; m];
    fill(&mut occ, 0, n, &mut out);
    out
}

fn fill(occ: &mut [u8], mode: usize, remaining: usize, out: &mut Vec<FockState>) {
    if mode == occ.len() - 1 {
        occ[mode] = remaining as u8;
        out.push(FockState(occ.to_vec()));
        occ[mode] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        occ[mode] = k as u8;
        fill(occ, mode + 1, remaining - k, out);
    }
    occ[mode] = 0;
}

/// ⟨t| U |s⟩ = Perm(U[t, s]) / sqrt(Π s_j! Π t_i!), where `U[t, s]` repeats
/// row i of U t_i times and column j s_j times.
pub fn transition_amplitude(u: &ComplexMatrix, s: &FockState, t: &FockState) -> Result<Complex64> {
    check_modes(u, s)?;
    check_modes(u, t)?;
    let (ns, nt) = (s.photons(), t.photons());
    if ns != nt {
        return Err(Error::Conservation {
            input: ns,
            output: nt,
        });
    }
    let cols = s.photon_modes();
    let rows = t.photon_modes();
    let sub = ComplexMatrix::from_fn(ns, ns, |a, b| u[(rows[a], cols[b])]);
    let norm = (s.factorial_product() * t.factorial_product()).sqrt();
    Ok(permanent(&sub)? / norm)
}

fn check_modes(u: &ComplexMatrix, s: &FockState) -> Result<()> {
    if !u.is_square() {
        return Err(Error::Dimension(format!(
            "interferometer must be square, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    if s.modes() != u.nrows() {
        return Err(Error::Dimension(format!(
            "state has {} modes but the interferometer has {}",
            s.modes(),
            u.nrows()
        )));
    }
    Ok(())
}

/// Amplitudes of every output state, in [`enumerate_fock`] order.
pub fn output_amplitudes(u: &ComplexMatrix, s: &FockState) -> Result<Vec<(FockState, Complex64)>> {
    check_modes(u, s)?;
    enumerate_fock(u.nrows(), s.photons())
        .into_iter()
        .map(|t| {
            let a = transition_amplitude(u, s, &t)?;
            Ok((t, a))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub total_n: usize,
    pub entries: BTreeMap<FockState, f64>,
}

impl OutputDistribution {
    pub fn probability(&self, t: &FockState) -> f64 {
        self.entries.get(t).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multinomial draw of `shots` events by sequential conditional
    /// binomials over the states in key order.
    pub fn sample<R: Rng>(&self, shots: u64, rng: &mut R) -> BTreeMap<FockState, u64> {
        sample_multinomial(&self.entries, shots, rng)
    }

    pub fn to_csv(&self) -> String {
        distribution_to_csv(&self.entries)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let entries = distribution_from_csv(text)?;
        let total_n = entries.keys().next().map(|k| k.photons()).unwrap_or(0);
        if let Some(bad) = entries.keys().find(|k| k.photons() != total_n) {
            return Err(Error::Parse(format!(
                "state {bad} does not carry {total_n} photons"
            )));
        }
        Ok(OutputDistribution { total_n, entries })
    }
}

pub(crate) fn sample_multinomial<R: Rng>(
    entries: &BTreeMap<FockState, f64>,
    shots: u64,
    rng: &mut R,
) -> BTreeMap<FockState, u64> {
    let probs: Vec<f64> = entries.values().copied().collect();
    entries
        .keys()
        .zip(multinomial_counts(&probs, shots, rng))
        .filter(|(_, k)| *k > 0)
        .map(|(s, k)| (s.clone(), k))
        .collect()
}

/// Multinomial draw over `probs` (renormalised, negatives treated as zero)
/// by sequential conditional binomials.
pub fn multinomial_counts<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let Some(last) = probs.iter().rposition(|&p| p > 0.0) else {
        return counts;
    };
    for (idx, &p) in probs.iter().enumerate() {
        let p = p.max(0.0);
        if remaining == 0 {
            break;
        }
        let k = if p == 0.0 {
            0
        } else if idx == last || p >= mass_left {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(rng)
        };
        counts[idx] = k;
        remaining -= k;
        mass_left -= p;
    }
    counts
}

pub(crate) fn distribution_to_csv(entries: &BTreeMap<FockState, f64>) -> String {
    let mut out = String::from("occupations,probability\n");
    for (state, p) in entries {
        out.push_str(&format!("{state},{p:.17e}\n"));
    }
    out
}

pub(crate) fn distribution_from_csv(text: &str) -> Result<BTreeMap<FockState, f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "occupations,probability" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header `occupations,probability`, got {other:?}"
            )))
        }
    }
    let mut entries = BTreeMap::new();
    for line in lines {
        let (occ, p) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("malformed row `{line}`")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad probability `{p}`: {e}")))?;
        entries.insert(occ.parse::<FockState>()?, p);
    }
    Ok(entries)
}

/// Born-rule distribution over every `n`-photon output state.
pub fn output_distribution(u: &ComplexMatrix, s: &FockState) -> Result<OutputDistribution> {
    let entries = output_amplitudes(u, s)?
        .into_iter()
        .map(|(t, a)| (t, a.norm_sqr()))
        .collect();
    Ok(OutputDistribution {
        total_n: s.photons(),
        entries,
    })
}

/// `shots` samples of the output distribution of `s` through `u`.
pub fn sample_outputs(
    u: &ComplexMatrix,
    s: &FockState,
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<FockState, u64>> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be at least 1".into()));
    }
    let dist = output_distribution(u, s)?;
    let mut rng = seed::stream_rng(seed, seed::STREAM_SAMPLING, 0);
    Ok(dist.sample(shots, &mut rng))
}
