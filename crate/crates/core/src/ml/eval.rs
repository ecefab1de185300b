//! Cross-validated SVM accuracy on outcome-encoded data.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::Dataset2D;
use super::kmeans::kmeans;
use super::svm::{clip_psd, svm_predict, svm_train, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub splits: usize,
    pub train_fraction: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            splits: 100,
            train_fraction: 0.8,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random train/test partitions preserving class proportions: each class
/// contributes round(fraction · size) points to training, at least one.
pub fn stratified_partitions(
    labels: &[i8],
    splits: usize,
    train_fraction: f64,
    seed_root: u64,
) -> Result<Vec<Partition>> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_fraction} outside (0, 1]"
        )));
    }
    let classes: Vec<Vec<usize>> = [-1i8, 1]
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    if classes.iter().any(Vec::is_empty) {
        return Err(Error::DegenerateLabels);
    }
    Ok((0..splits)
        .map(|split| {
            let mut rng = seed::stream_rng(seed_root, seed::STREAM_SPLITS, split as u64);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for members in &classes {
                let mut shuffled = members.clone();
                shuffled.shuffle(&mut rng);
                let take = ((train_fraction * members.len() as f64).round() as usize)
                    .clamp(1, members.len());
                train.extend_from_slice(&shuffled[..take]);
                test.extend_from_slice(&shuffled[take..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Partition { train, test }
        })
        .collect())
}

/// Mean test accuracy over stratified splits. Point `a` is encoded into
/// outcome `outcome_of_point[a]`, so K(a, b) = kernel[outcome(a), outcome(b)].
pub fn cross_validate(
    kernel: &KernelMatrix,
    outcome_of_point: &[usize],
    labels: &[i8],
    options: &CvOptions,
) -> Result<CvResult> {
    if outcome_of_point.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} outcome indices for {} labels",
            outcome_of_point.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = outcome_of_point.iter().find(|&&o| o >= kernel.dim()) {
        return Err(Error::Shape(format!(
            "outcome {bad} outside a {0}x{0} kernel",
            kernel.dim()
        )));
    }
    let (values, _) = clip_psd(kernel.values());
    let partitions =
        stratified_partitions(labels, options.splits, options.train_fraction, options.seed)?;
    let lifted = |a: usize, b: usize| values[(outcome_of_point[a], outcome_of_point[b])];

    let mut accuracies = Vec::with_capacity(partitions.len());
    for part in &partitions {
        let n = part.train.len();
        let k = DMatrix::from_fn(n, n, |i, j| lifted(part.train[i], part.train[j]));
        let y: Vec<i8> = part.train.iter().map(|&i| labels[i]).collect();
        let mut model = svm_train(&k, &y, options.lambda)?;
        model.training_indices = part.train.clone();
        if part.test.is_empty() {
            continue;
        }
        let mut correct = 0usize;
        for &t in &part.test {
            let row: Vec<f64> = part.train.iter().map(|&l| lifted(l, t)).collect();
            if svm_predict(&model, &row)? == labels[t] {
                correct += 1;
            }
        }
        accuracies.push(correct as f64 / part.test.len() as f64);
    }
    if accuracies.is_empty() {
        return Err(Error::InvalidInput("no split has a test set".into()));
    }
    let mean_accuracy = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    Ok(CvResult {
        mean_accuracy,
        accuracies,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub cv: CvResult,
    /// Centroids in outcome order.
    pub centroids: Vec<[f64; 2]>,
    /// Outcome index of every data point.
    pub outcome_of_point: Vec<usize>,
}

/// Clusters the points into `kernel.dim()` groups, numbers the clusters by
/// centroid (x, then y) and cross-validates on the lifted kernel.
pub fn classify_2d_pipeline(
    dataset: &Dataset2D,
    kernel: &KernelMatrix,
    options: &CvOptions,
) -> Result<PipelineResult> {
    let k = kernel.dim();
    if dataset.points.len() != dataset.labels.len() {
        return Err(Error::Shape("points and labels differ in length".into()));
    }
    let clusters = kmeans(&dataset.points, k, options.seed)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (clusters.centroids[a], clusters.centroids[b]);
        ca[0].total_cmp(&cb[0]).then(ca[1].total_cmp(&cb[1]))
    });
    let mut rank = vec![0usize; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let outcome_of_point: Vec<usize> = clusters.assignment.iter().map(|&c| rank[c]).collect();
    let cv = cross_validate(kernel, &outcome_of_point, &dataset.labels, options)?;
    Ok(PipelineResult {
        cv,
        centroids: order.iter().map(|&c| clusters.centroids[c]).collect(),
        outcome_of_point,
    })
}

/// Equal-width histogram of `values` over [low, high]; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], bins: usize, low: f64, high: f64) -> Result<Histogram> {
    if bins == 0 || !(high > low) {
        return Err(Error::InvalidInput(format!(
            "cannot bin [{low}, {high}] into {bins} bins"
        )));
    }
    let width = (high - low) / bins as f64;
    let edges = (0..=bins).map(|i| low + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        if !(low..=high).contains(&v) {
            return Err(Error::InvalidInput(format!(
                "value {v} outside [{low}, {high}]"
            )));
        }
        counts[(((v - low) / width) as usize).min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}
