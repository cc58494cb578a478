//! Internal cluster validity indices and the average clustering
//! coefficient of a neighbor graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, DistanceMatrix, EmbeddingMatrix, KnnGraph};

/// Intermediate quantities behind the three indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CviWorkspace {
    /// Mean distance from each point to the other members of its cluster.
    pub a: Vec<f64>,
    /// Mean distance from each point to the nearest other cluster.
    pub b: Vec<f64>,
    /// Mean distance from each cluster's members to its centroid.
    pub s: Vec<f64>,
    /// `(s_i + s_j) / |mu_i - mu_j|`, row-major `k x k`, zero diagonal.
    pub r: Vec<f64>,
    pub trace_between: f64,
    pub trace_within: f64,
}

impl CviWorkspace {
    pub fn compute(x: &EmbeddingMatrix, dist: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<Self> {
        check_inputs(x.n(), assignment)?;
        check_inputs(dist.n(), assignment)?;
        let (a, b) = silhouette_terms(dist, assignment);
        let scatter = Scatter::new(x, assignment)?;
        let k = assignment.k();
        let mut r = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    r[i * k + j] = (scatter.spread[i] + scatter.spread[j]) / scatter.centroid_distance(i, j);
                }
            }
        }
        Ok(CviWorkspace {
            a,
            b,
            s: scatter.spread.clone(),
            r,
            trace_between: scatter.trace_between,
            trace_within: scatter.trace_within,
        })
    }
}

fn check_inputs(n: usize, assignment: &ClusterAssignment) -> Result<()> {
    if assignment.n() != n {
        return Err(Error::LengthMismatch {
            left: assignment.n(),
            right: n,
        });
    }
    if assignment.k() < 2 {
        return Err(Error::SingleCluster);
    }
    Ok(())
}

/// Per-point `(a, b)`; `b` is infinite when there is no other cluster.
fn silhouette_terms(dist: &DistanceMatrix, assignment: &ClusterAssignment) -> (Vec<f64>, Vec<f64>) {
    let labels = assignment.labels();
    let sizes = assignment.sizes();
    let k = assignment.k();
    let terms: Vec<(f64, f64)> = (0..dist.n())
        .into_par_iter()
        .map(|i| {
            let mut sums = vec![0.0; k];
            for (j, &dij) in dist.row(i).iter().enumerate() {
                sums[labels[j]] += dij;
            }
            let own = labels[i];
            let a = if sizes[own] > 1 {
                sums[own] / (sizes[own] - 1) as f64
            } else {
                0.0
            };
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            (a, b)
        })
        .collect();
    terms.into_iter().unzip()
}

/// Per-point silhouette values `(b - a) / max(a, b)`. Members of singleton
/// clusters score 0.
pub fn silhouette_samples(dist: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<Vec<f64>> {
    check_inputs(dist.n(), assignment)?;
    let (a, b) = silhouette_terms(dist, assignment);
    let sizes = assignment.sizes();
    Ok(assignment
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let m = a[i].max(b[i]);
            if sizes[l] == 1 || m == 0.0 {
                0.0
            } else {
                (b[i] - a[i]) / m
            }
        })
        .collect())
}

/// Mean silhouette over all points, in `[-1, 1]`.
pub fn silhouette_score(dist: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<f64> {
    let s = silhouette_samples(dist, assignment)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

struct Scatter {
    d: usize,
    centroids: Vec<f64>,
    spread: Vec<f64>,
    trace_between: f64,
    trace_within: f64,
}

impl Scatter {
    fn new(x: &EmbeddingMatrix, assignment: &ClusterAssignment) -> Result<Self> {
        let d = x.d();
        let k = assignment.k();
        let centroids = assignment.mean_centroids(x)?;
        let mean = x.column_means();
        let sizes = assignment.sizes();
        let mut spread = vec![0.0; k];
        let mut trace_within = 0.0;
        for (i, row) in x.rows().enumerate() {
            let l = assignment.labels()[i];
            let mu = &centroids[l * d..(l + 1) * d];
            let sq: f64 = row.iter().zip(mu).map(|(&v, m)| (v as f64 - m).powi(2)).sum();
            trace_within += sq;
            spread[l] += sq.sqrt();
        }
        for (s, &size) in spread.iter_mut().zip(sizes) {
            *s /= size as f64;
        }
        let trace_between = (0..k)
            .map(|j| {
                let mu = &centroids[j * d..(j + 1) * d];
                sizes[j] as f64 * mu.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum();
        Ok(Scatter {
            d,
            centroids,
            spread,
            trace_between,
            trace_within,
        })
    }

    fn centroid_distance(&self, i: usize, j: usize) -> f64 {
        let d = self.d;
        self.centroids[i * d..(i + 1) * d]
            .iter()
            .zip(&self.centroids[j * d..(j + 1) * d])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Calinski-Harabasz index `tr(B) (N - K) / (tr(W) (K - 1))`. Returns
/// `f64::INFINITY` when every cluster is a single repeated point.
pub fn calinski_harabasz(x: &EmbeddingMatrix, assignment: &ClusterAssignment) -> Result<f64> {
    check_inputs(x.n(), assignment)?;
    let (n, k) = (x.n(), assignment.k());
    if n == k {
        return Err(Error::DegenerateAllPoints);
    }
    let s = Scatter::new(x, assignment)?;
    if s.trace_within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(s.trace_between * (n - k) as f64 / (s.trace_within * (k - 1) as f64))
}

/// Davies-Bouldin index, the mean over clusters of the worst
/// `(s_i + s_j) / |mu_i - mu_j|`. Lower is better.
pub fn davies_bouldin(x: &EmbeddingMatrix, assignment: &ClusterAssignment) -> Result<f64> {
    check_inputs(x.n(), assignment)?;
    let s = Scatter::new(x, assignment)?;
    let k = assignment.k();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = s.centroid_distance(i, j);
            if sep < 1e-12 {
                return Err(Error::CoincidentCentroids(i.min(j), i.max(j)));
            }
            worst = worst.max((s.spread[i] + s.spread[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub local_coefficients: Vec<f64>,
    pub degrees: Vec<usize>,
    pub average: f64,
}

/// Local clustering coefficients of the undirected graph. Nodes with fewer
/// than two neighbors get 0 and still count toward the average.
pub fn graph_stats(graph: &KnnGraph) -> GraphStats {
    let sym;
    let g = if graph.is_symmetrized() {
        graph
    } else {
        sym = graph.symmetrize();
        &sym
    };
    let (local_coefficients, degrees): (Vec<f64>, Vec<usize>) = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let nb: Vec<usize> = g.neighbors(v).iter().map(|&(u, _)| u).filter(|&u| u != v).collect();
            let deg = nb.len();
            if deg < 2 {
                return (0.0, deg);
            }
            let mut links = 0usize;
            for (p, &u) in nb.iter().enumerate() {
                for &w in &nb[p + 1..] {
                    if g.has_edge(u, w) {
                        links += 1;
                    }
                }
            }
            (2.0 * links as f64 / (deg * (deg - 1)) as f64, deg)
        })
        .unzip();
    let average = if local_coefficients.is_empty() {
        0.0
    } else {
        local_coefficients.iter().sum::<f64>() / local_coefficients.len() as f64
    };
    GraphStats {
        local_coefficients,
        degrees,
        average,
    }
}

pub fn avg_clustering_coefficient(graph: &KnnGraph) -> f64 {
    graph_stats(graph).average
}
