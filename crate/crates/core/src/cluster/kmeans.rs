//! Lloyd's k-means with k-means++ seeding and independent restarts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, EmbeddingMatrix, RngSeed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    /// Stop once the relative inertia decrease falls to this value.
    pub tol: f64,
    pub seed: RngSeed,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        KMeansConfig {
            k,
            n_init: 50,
            max_iter: 10_000,
            tol: 1e-6,
            seed: RngSeed(0),
        }
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init;
        self
    }
}

#[derive(Debug, Clone)]
pub struct KMeansOutput {
    pub assignment: ClusterAssignment,
    /// Inertia of the returned solution against its final centroids.
    pub inertia: f64,
    pub best_restart: usize,
    /// Inertia after every assignment step, per restart.
    pub traces: Vec<Vec<f64>>,
}

struct Run {
    labels: Vec<usize>,
    trace: Vec<f64>,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seeds(rows: &[f64], n: usize, d: usize, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k * d);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(&rows[first * d..(first + 1) * d]);
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(&rows[i * d..(i + 1) * d], &centers[..d])).collect();
    for _ in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = &rows[pick * d..(pick + 1) * d];
        centers.extend_from_slice(c);
        for (i, best) in closest.iter_mut().enumerate() {
            *best = best.min(sq_dist(&rows[i * d..(i + 1) * d], c));
        }
    }
    centers
}

/// Nearest-centroid assignment. Empty clusters take the point farthest from
/// its centroid (from clusters that can spare one), which never raises the
/// inertia. Returns the inertia.
fn assign(rows: &[f64], d: usize, k: usize, centers: &mut [f64], labels: &mut [usize]) -> f64 {
    let n = labels.len();
    let mut dist = vec![0.0; n];
    let mut sizes = vec![0usize; k];
    for i in 0..n {
        let x = &rows[i * d..(i + 1) * d];
        let mut best = (0, f64::INFINITY);
        for j in 0..k {
            let v = sq_dist(x, &centers[j * d..(j + 1) * d]);
            if v < best.1 {
                best = (j, v);
            }
        }
        labels[i] = best.0;
        dist[i] = best.1;
        sizes[best.0] += 1;
    }
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let far = (0..n)
            .filter(|&i| sizes[labels[i]] > 1)
            .fold(None::<usize>, |acc, i| match acc {
                Some(b) if dist[b] >= dist[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n leaves a cluster with a spare point");
        sizes[labels[far]] -= 1;
        labels[far] = empty;
        sizes[empty] = 1;
        dist[far] = 0.0;
        centers[empty * d..(empty + 1) * d].copy_from_slice(&rows[far * d..(far + 1) * d]);
    }
    dist.iter().sum()
}

fn update_centroids(rows: &[f64], d: usize, k: usize, labels: &[usize], centers: &mut [f64]) {
    let mut sizes = vec![0usize; k];
    centers.iter_mut().for_each(|c| *c = 0.0);
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        for (c, v) in centers[l * d..(l + 1) * d].iter_mut().zip(&rows[i * d..(i + 1) * d]) {
            *c += v;
        }
    }
    for (j, &s) in sizes.iter().enumerate() {
        centers[j * d..(j + 1) * d].iter_mut().for_each(|c| *c /= s as f64);
    }
}

fn single_run(rows: &[f64], n: usize, d: usize, cfg: &KMeansConfig, seed: RngSeed) -> Run {
    let k = cfg.k;
    let mut rng = seed.rng();
    let mut centers = plus_plus_seeds(rows, n, d, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut prev = assign(rows, d, k, &mut centers, &mut labels);
    let mut trace = vec![prev];
    let mut next_labels = labels.clone();
    for _ in 0..cfg.max_iter {
        update_centroids(rows, d, k, &labels, &mut centers);
        let inertia = assign(rows, d, k, &mut centers, &mut next_labels);
        trace.push(inertia);
        let unchanged = next_labels == labels;
        std::mem::swap(&mut labels, &mut next_labels);
        if unchanged || prev - inertia <= cfg.tol * prev {
            break;
        }
        prev = inertia;
    }
    Run { labels, trace }
}

/// K-means returning the best of `n_init` restarts by inertia, with the
/// inertia trace of every restart.
pub fn kmeans_with_trace(y: &EmbeddingMatrix, cfg: &KMeansConfig) -> Result<KMeansOutput> {
    let (n, d) = (y.n(), y.d());
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::KTooLarge { k: cfg.k, max: n });
    }
    let rows = y.to_f64();
    let runs: Vec<Run> = (0..cfg.n_init.max(1))
        .into_par_iter()
        .map(|r| single_run(&rows, n, d, cfg, cfg.seed.derive(r as u64)))
        .collect();

    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for (r, run) in runs.iter().enumerate() {
        let mut centers = vec![0.0; cfg.k * d];
        update_centroids(&rows, d, cfg.k, &run.labels, &mut centers);
        let inertia: f64 = run
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| sq_dist(&rows[i * d..(i + 1) * d], &centers[l * d..(l + 1) * d]))
            .sum();
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((r, inertia, centers));
        }
    }
    let (best_restart, inertia, centers) = best.expect("at least one restart");
    let assignment = ClusterAssignment::new(runs[best_restart].labels.clone(), cfg.k)?.with_centroids(d, centers)?;
    Ok(KMeansOutput {
        assignment,
        inertia,
        best_restart,
        traces: runs.into_iter().map(|r| r.trace).collect(),
    })
}

/// K-means clustering with centroids attached to the result.
pub fn kmeans(y: &EmbeddingMatrix, cfg: &KMeansConfig) -> Result<ClusterAssignment> {
    Ok(kmeans_with_trace(y, cfg)?.assignment)
}
