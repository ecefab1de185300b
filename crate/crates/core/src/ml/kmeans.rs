//! K-means with k-means++ seeding and Lloyd iterations.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<const D: usize> {
    pub centroids: Vec<[f64; D]>,
    pub assignment: Vec<usize>,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl<const D: usize> KMeansResult<D> {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

pub fn squared_distance<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest<const D: usize>(p: &[f64; D], centroids: &[[f64; D]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus<const D: usize, R: Rng>(points: &[[f64; D]], k: usize, rng: &mut R) -> Vec<[f64; D]> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total <= 0.0 {
            // every point coincides with a centroid; take the first unused one
            (0..points.len())
                .find(|&i| !centroids.contains(&points[i]))
                .unwrap_or(0)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            while dist[chosen] == 0.0 && chosen > 0 {
                chosen -= 1;
            }
            chosen
        };
        centroids.push(points[next]);
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &points[next]));
        }
    }
    centroids
}

/// Clusters `points` into `k` groups; deterministic per `seed`.
pub fn kmeans<const D: usize>(
    points: &[[f64; D]],
    k: usize,
    seed_root: u64,
) -> Result<KMeansResult<D>> {
    if k == 0 || points.len() < k {
        return Err(Error::Size(format!(
            "{} points cannot form {k} clusters",
            points.len()
        )));
    }
    let mut rng = seed::stream_rng(seed_root, seed::STREAM_KMEANS, k as u64);
    let mut centroids = plus_plus(points, k, &mut rng);
    let mut assignment = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        let mut inertia = 0.0;
        for (a, p) in assignment.iter_mut().zip(points) {
            let (c, d) = nearest(p, &centroids);
            inertia += d;
            // keep the current cluster on ties
            if *a != c && (*a == usize::MAX || squared_distance(p, &centroids[*a]) > d) {
                *a = c;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed && iterations > 1 {
            break;
        }

        let mut sums = vec![[0.0; D]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (x, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *x = s / counts[c] as f64;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed with the point farthest from its own centroid,
                // taken from a cluster that keeps at least one member
                let far = (0..points.len())
                    .filter(|&a| counts[assignment[a]] > 1)
                    .max_by(|&a, &b| {
                        squared_distance(&points[a], &centroids[assignment[a]])
                            .total_cmp(&squared_distance(&points[b], &centroids[assignment[b]]))
                    })
                    .expect("points is non-empty");
                centroids[c] = points[far];
                counts[assignment[far]] -= 1;
                assignment[far] = c;
                counts[c] = 1;
            }
        }
    }

    Ok(KMeansResult {
        centroids,
        assignment,
        inertia_history: history,
        iterations,
    })
}
