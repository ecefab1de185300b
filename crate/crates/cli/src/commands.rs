//! The `run` subcommands.

use std::fs;
use std::path::Path;

use abs_core::abs::{
    conditional_state, ideal_states, overlap_kernel, random_permutations, reassign_outcomes,
    AbsScheme,
};
use abs_core::interferometer::{
    amplitude_fidelity, clements_decompose, mesh_to_unitary, MeshProgram,
};
use abs_core::kernel::KernelMatrix;
use abs_core::linalg::{c, haar_unitary, max_abs_diff, unitarity_error, ComplexMatrix};
use abs_core::ml::{
    classify_2d_pipeline, cross_validate, histogram, make_moons, CvOptions, CvResult, Dataset1D,
    Dataset2D,
};
use abs_core::noise::{hom_visibility, noise_branch_weight, noisy_conditional_state, NoiseModel};
use abs_core::qstate::{
    fidelity_kernel_labeled, mle_reconstruct, simulate_tomography, uhlmann_fidelity, DensityMatrix,
};
use abs_core::seed;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::report::{Accuracies, Artifacts, OutcomeProbability, RunReport};
use crate::{Method, RunArgs};

/// Moons drawn when `--dataset moons` is given.
const MOONS_POINTS: usize = 200;
const MOONS_NOISE: f64 = 0.1;
const HISTOGRAM_BINS: usize = 10;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(path, e))
}

fn load_scheme(path: &Path) -> Result<AbsScheme, CliError> {
    AbsScheme::from_json(&read(path)?).map_err(|e| CliError::config(path, e))
}

fn load_noise(path: &Path) -> Result<NoiseModel, CliError> {
    NoiseModel::from_json(&read(path)?).map_err(|e| CliError::config(path, e))
}

fn optional_noise(args: &RunArgs) -> Result<Option<NoiseModel>, CliError> {
    args.noise.as_deref().map(load_noise).transpose()
}

fn labelled_probabilities(scheme: &AbsScheme, probabilities: &[f64]) -> Vec<OutcomeProbability> {
    scheme
        .outcome_labels()
        .into_iter()
        .zip(probabilities)
        .enumerate()
        .map(|(outcome, (label, &probability))| OutcomeProbability {
            outcome,
            label,
            probability,
        })
        .collect()
}

/// Conditional states and their probabilities, ideal or under `noise`.
fn states(
    scheme: &AbsScheme,
    noise: Option<&NoiseModel>,
) -> Result<(Vec<f64>, Vec<DensityMatrix>), CliError> {
    let mut probabilities = Vec::with_capacity(scheme.outcome_count());
    let mut rhos = Vec::with_capacity(scheme.outcome_count());
    for i in 0..scheme.outcome_count() {
        let (p, rho) = match noise {
            Some(model) => noisy_conditional_state(scheme, i, model)?,
            None => conditional_state(scheme, i)?,
        };
        probabilities.push(p);
        rhos.push(rho);
    }
    Ok((probabilities, rhos))
}

#[derive(Deserialize)]
struct UnitaryJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn parse_unitary(path: &Path, json: UnitaryJson) -> Result<ComplexMatrix, CliError> {
    let n = json.re.len();
    if json.im.len() != n || json.re.iter().chain(&json.im).any(|r| r.len() != n) {
        return Err(CliError::config(
            path,
            format!("`unitary` re/im must both be {n}x{n}"),
        ));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        c(json.re[i][j], json.im[i][j])
    }))
}

/// The unitary named by a mesh config: a scheme's base mesh, a mesh
/// program, an explicit `unitary`, or `haar` modes drawn from the seed.
fn mesh_target(
    path: &Path,
    seed_root: u64,
    report: &mut RunReport,
) -> Result<ComplexMatrix, CliError> {
    let value: Value = serde_json::from_str(&read(path)?).map_err(|e| CliError::config(path, e))?;
    let bad = |e: serde_json::Error| CliError::config(path, e);
    if value.get("base_mesh").is_some() {
        Ok(mesh_to_unitary(&load_scheme(path)?.config().base_mesh)?)
    } else if value.get("cells").is_some() {
        let mesh: MeshProgram = serde_json::from_value(value).map_err(bad)?;
        mesh_to_unitary(&mesh).map_err(|e| CliError::config(path, e))
    } else if let Some(u) = value.get("unitary") {
        parse_unitary(path, serde_json::from_value(u.clone()).map_err(bad)?)
    } else if let Some(m) = value.get("haar") {
        let m: usize = serde_json::from_value(m.clone()).map_err(bad)?;
        let seed = seed::derive_seed(seed_root, seed::STREAM_HAAR, 0);
        report.seeds.insert("haar".into(), seed);
        haar_unitary(m, seed).map_err(|e| CliError::config(path, format!("`haar`: {e}")))
    } else {
        Err(CliError::config(
            path,
            "expected one of `base_mesh`, `cells`, `unitary` or `haar`",
        ))
    }
}

pub fn mesh(args: &RunArgs, report: &mut RunReport, out: &mut Artifacts) -> Result<(), CliError> {
    let u = mesh_target(&args.config, args.seed, report)?;
    let decomposed = clements_decompose(&u)?;
    let rebuilt = mesh_to_unitary(&decomposed)?;
    report.metrics.insert("modes".into(), u.nrows() as f64);
    report
        .metrics
        .insert("cells".into(), decomposed.cells.len() as f64);
    report
        .metrics
        .insert("unitarity_error".into(), unitarity_error(&u));
    report
        .metrics
        .insert("round_trip_error".into(), max_abs_diff(&rebuilt, &u));
    report.metrics.insert(
        "amplitude_fidelity".into(),
        amplitude_fidelity(&rebuilt, &u)?,
    );
    out.add_json("mesh.json", &decomposed)
}

#[derive(Serialize)]
struct StateRecord<'a> {
    outcome: usize,
    label: &'a str,
    probability: f64,
    state: &'a DensityMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    noisy_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noisy_state: Option<&'a DensityMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
}

pub fn simulate(
    args: &RunArgs,
    report: &mut RunReport,
    out: &mut Artifacts,
) -> Result<(), CliError> {
    let scheme = load_scheme(&args.config)?;
    let noise = optional_noise(args)?;
    let labels = scheme.outcome_labels();
    let (probabilities, ideal) = states(&scheme, None)?;
    let noisy = noise
        .as_ref()
        .map(|m| states(&scheme, Some(m)))
        .transpose()?;
    if let Some((_, noisy_states)) = &noisy {
        report.fidelities = ideal
            .iter()
            .zip(noisy_states)
            .map(|(a, b)| uhlmann_fidelity(a, b))
            .collect::<Result<_, _>>()?;
    }

    let mut csv = String::from("outcome,label,probability");
    csv.push_str(if noisy.is_some() {
        ",noisy_probability,fidelity\n"
    } else {
        "\n"
    });
    let mut records = Vec::with_capacity(ideal.len());
    for i in 0..ideal.len() {
        let noisy_i = noisy
            .as_ref()
            .map(|(p, s)| (p[i], &s[i], report.fidelities[i]));
        csv.push_str(&format!("{i},{},{}", labels[i], probabilities[i]));
        match noisy_i {
            Some((p, _, f)) => csv.push_str(&format!(",{p},{f}\n")),
            None => csv.push('\n'),
        }
        records.push(StateRecord {
            outcome: i,
            label: &labels[i],
            probability: probabilities[i],
            state: &ideal[i],
            noisy_probability: noisy_i.map(|x| x.0),
            noisy_state: noisy_i.map(|x| x.1),
            fidelity: noisy_i.map(|x| x.2),
        });
    }
    report.probabilities = labelled_probabilities(&scheme, &probabilities);
    out.add("probabilities.csv", csv);
    out.add_json("states.json", &records)
}

pub fn kernel(args: &RunArgs, report: &mut RunReport, out: &mut Artifacts) -> Result<(), CliError> {
    let scheme = load_scheme(&args.config)?;
    let (name, kernel) = match args.method {
        Method::Fidelity => {
            let noise = optional_noise(args)?;
            let (probabilities, rhos) = states(&scheme, noise.as_ref())?;
            report.probabilities = labelled_probabilities(&scheme, &probabilities);
            (
                "kernel_fidelity.csv",
                fidelity_kernel_labeled(&rhos, scheme.outcome_labels())?,
            )
        }
        Method::Overlap => {
            if args.noise.is_some() {
                return Err(CliError::Usage(
                    "--noise applies to the fidelity method only".into(),
                ));
            }
            report.seeds.insert("overlap".into(), args.seed);
            report.metrics.insert("shots".into(), args.shots as f64);
            (
                "kernel_overlap.csv",
                overlap_kernel(&scheme, args.shots, args.seed)?,
            )
        }
    };
    report.kernel_paths.push(name.into());
    out.add(name, kernel.to_csv());
    Ok(())
}

#[derive(Serialize)]
struct Reconstruction<'a> {
    outcome: usize,
    label: &'a str,
    seed: u64,
    fidelity: f64,
    state: DensityMatrix,
}

pub fn tomo(args: &RunArgs, report: &mut RunReport, out: &mut Artifacts) -> Result<(), CliError> {
    let scheme = load_scheme(&args.config)?;
    let noise = optional_noise(args)?;
    let (_, rhos) = states(&scheme, noise.as_ref())?;
    let labels = scheme.outcome_labels();
    let mut csv = String::from("outcome,label,fidelity\n");
    let mut records = Vec::with_capacity(rhos.len());
    for (i, rho) in rhos.iter().enumerate() {
        let s = seed::derive_seed(args.seed, seed::STREAM_TOMOGRAPHY, i as u64);
        let estimate = mle_reconstruct(&simulate_tomography(rho, args.shots, s)?)?;
        let fidelity = uhlmann_fidelity(&estimate, rho)?;
        csv.push_str(&format!("{i},{},{fidelity}\n", labels[i]));
        report.seeds.insert(format!("tomography/{i}"), s);
        report.fidelities.push(fidelity);
        records.push(Reconstruction {
            outcome: i,
            label: &labels[i],
            seed: s,
            fidelity,
            state: estimate,
        });
    }
    report
        .metrics
        .insert("shots_per_basis".into(), args.shots as f64);
    out.add("tomography.csv", csv);
    out.add_json("reconstructed.json", &records)
}

enum Data {
    OneD(Dataset1D),
    TwoD(Dataset2D),
}

/// `--dataset` is a CSV path or `moons`; without it the default 1D preset
/// over the scheme's outcomes is used.
fn load_dataset(args: &RunArgs, outcomes: usize) -> Result<Data, CliError> {
    let Some(source) = args.dataset.as_deref() else {
        return Ok(Data::OneD(Dataset1D::default_preset(outcomes)));
    };
    if source == "moons" {
        return Ok(Data::TwoD(make_moons(
            MOONS_POINTS,
            MOONS_NOISE,
            args.seed,
        )?));
    }
    let path = Path::new(source);
    let text = read(path)?;
    let header = text.lines().next().unwrap_or_default().trim();
    let parsed = match header {
        "x,y,label,outcome" => Dataset1D::from_csv(&text).map(Data::OneD),
        "x,y,label" => Dataset2D::from_csv(&text).map(Data::TwoD),
        other => {
            return Err(CliError::config(
                path,
                format!("unknown dataset header `{other}`"),
            ))
        }
    };
    let data = parsed.map_err(|e| CliError::config(path, e))?;
    if let Data::OneD(d) = &data {
        if let Some(p) = d.points.iter().find(|p| p.outcome >= outcomes) {
            return Err(CliError::config(
                path,
                format!("outcome {} outside 0..{outcomes}", p.outcome),
            ));
        }
    }
    Ok(data)
}

fn evaluate(data: &Data, kernel: &KernelMatrix, options: &CvOptions) -> Result<CvResult, CliError> {
    Ok(match data {
        Data::OneD(d) => cross_validate(kernel, &d.outcomes(), &d.labels(), options)?,
        Data::TwoD(d) => classify_2d_pipeline(d, kernel, options)?.cv,
    })
}

fn scheme_kernel(scheme: &AbsScheme, noise: Option<&NoiseModel>) -> Result<KernelMatrix, CliError> {
    let rhos = match noise {
        Some(model) => states(scheme, Some(model))?.1,
        None => ideal_states(scheme)?,
    };
    Ok(fidelity_kernel_labeled(&rhos, scheme.outcome_labels())?)
}

fn cv_options(args: &RunArgs) -> CvOptions {
    CvOptions {
        seed: args.seed,
        ..CvOptions::default()
    }
}

pub fn classify(
    args: &RunArgs,
    report: &mut RunReport,
    out: &mut Artifacts,
) -> Result<(), CliError> {
    let scheme = load_scheme(&args.config)?;
    let kernel = match &args.kernel {
        Some(path) => {
            KernelMatrix::from_csv(&read(path)?).map_err(|e| CliError::config(path, e))?
        }
        None => scheme_kernel(&scheme, optional_noise(args)?.as_ref())?,
    };
    if kernel.dim() != scheme.outcome_count() {
        return Err(CliError::Config(format!(
            "kernel is {0}x{0} but the scheme has {1} outcomes",
            kernel.dim(),
            scheme.outcome_count()
        )));
    }
    let data = load_dataset(args, scheme.outcome_count())?;
    let options = cv_options(args);
    report.seeds.insert("splits".into(), options.seed);
    let cv = evaluate(&data, &kernel, &options)?;
    let mut csv = String::from("split,accuracy\n");
    for (i, a) in cv.accuracies.iter().enumerate() {
        csv.push_str(&format!("{i},{a}\n"));
    }
    if args.kernel.is_none() {
        report.kernel_paths.push("kernel_fidelity.csv".into());
        out.add("kernel_fidelity.csv", kernel.to_csv());
    }
    report.accuracies = Some(Accuracies {
        mean: cv.mean_accuracy,
        values: cv.accuracies,
    });
    out.add("accuracies.csv", csv);
    Ok(())
}

pub fn permute_histogram(
    args: &RunArgs,
    report: &mut RunReport,
    out: &mut Artifacts,
) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let scheme = load_scheme(&args.config)?;
    let noise = optional_noise(args)?;
    let data = load_dataset(args, scheme.outcome_count())?;
    let options = cv_options(args);
    report.seeds.insert("permutations".into(), args.seed);
    report.seeds.insert("splits".into(), options.seed);

    let mut csv = String::from("index,accuracy,permutation\n");
    let mut accuracies = Vec::with_capacity(args.count);
    for (i, perm) in random_permutations(scheme.outcome_count(), args.count, args.seed)
        .iter()
        .enumerate()
    {
        let kernel = scheme_kernel(&reassign_outcomes(&scheme, perm)?, noise.as_ref())?;
        let accuracy = evaluate(&data, &kernel, &options)?.mean_accuracy;
        let joined: Vec<String> = perm.iter().map(|p| p.to_string()).collect();
        csv.push_str(&format!("{i},{accuracy},{}\n", joined.join("|")));
        accuracies.push(accuracy);
    }
    let hist = histogram(&accuracies, HISTOGRAM_BINS, 0.0, 1.0)?;
    let mut hist_csv = String::from("bin_low,bin_high,count\n");
    for (b, count) in hist.counts.iter().enumerate() {
        hist_csv.push_str(&format!(
            "{},{},{count}\n",
            hist.edges[b],
            hist.edges[b + 1]
        ));
    }
    report.accuracies = Some(Accuracies {
        mean: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
        values: accuracies,
    });
    out.add("permutations.csv", csv);
    out.add("histogram.csv", hist_csv);
    Ok(())
}

/// The config is a noise model; emits the predicted 50:50 HOM visibility
/// of every photon pair.
pub fn noise_predict(
    args: &RunArgs,
    report: &mut RunReport,
    out: &mut Artifacts,
) -> Result<(), CliError> {
    let model = load_noise(&args.config)?;
    let s = model.gram.overlaps();
    let mut csv = String::from("i,j,overlap_re,overlap_im,visibility\n");
    for i in 0..model.gram.n() {
        for j in i + 1..model.gram.n() {
            let v = hom_visibility(s[(i, j)], 0.5);
            csv.push_str(&format!("{i},{j},{},{},{v}\n", s[(i, j)].re, s[(i, j)].im));
            report.metrics.insert(format!("visibility/{i}-{j}"), v);
        }
    }
    report.metrics.insert("g2".into(), model.g2);
    report
        .metrics
        .insert("noise_branch_weight".into(), noise_branch_weight(model.g2)?);
    out.add("hom.csv", csv);
    Ok(())
}
