//! UMAP: fuzzy simplicial set over a kNN graph, laid out by stochastic
//! gradient descent with negative sampling.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{pca, ReducerConfig};
use crate::distance::{build_knn_graph, MetricSpec};
use crate::error::{Error, Result};
use crate::model::EmbeddingMatrix;

const SMOOTH_STEPS: usize = 64;
const SMOOTH_TOL: f64 = 1e-5;
const MIN_K_DIST_SCALE: f64 = 1e-3;
const NEGATIVE_SAMPLE_RATE: usize = 5;
const REPULSION_STRENGTH: f64 = 1.0;
const GRAD_CLIP: f64 = 4.0;
const SPREAD: f64 = 1.0;
const INIT_EXTENT: f64 = 10.0;
const INIT_NOISE: f64 = 1e-4;

/// Parameters of the low-dimensional membership curve `1 / (1 + a d^(2b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParameters {
    pub a: f64,
    pub b: f64,
}

fn curve_target(x: f64, min_dist: f64) -> f64 {
    if x < min_dist {
        1.0
    } else {
        (-(x - min_dist) / SPREAD).exp()
    }
}

fn curve(x: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * x.powf(2.0 * b))
}

/// Least-squares fit (Levenberg-Marquardt) of the membership curve to the
/// piecewise target defined by `min_dist`, on 300 points over `[0, 3]`.
pub fn fit_curve_parameters(min_dist: f64) -> Result<CurveParameters> {
    if !(min_dist > 0.0 && min_dist < 1.0) {
        return Err(Error::InvalidConfig(format!("min_dist {min_dist} outside (0, 1)")));
    }
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * SPREAD * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| curve_target(x, min_dist)).collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (curve(x, a, b) - y).powi(2))
            .sum()
    };
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut cost = sse(a, b);
    for _ in 0..500 {
        // Normal equations J^T J delta = -J^T r for the 2-parameter model.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let f = curve(x, a, b);
            let r = f - y;
            let (da, db) = if x > 0.0 {
                let p = x.powf(2.0 * b);
                let f2 = f * f;
                (-p * f2, -a * p * 2.0 * x.ln() * f2)
            } else {
                (0.0, 0.0)
            };
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..50 {
            let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m11 * m22 - jab * jab;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m22 * ga - jab * gb) / det;
            let step_b = -(m11 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let nc = sse(na, nb);
                if nc < cost {
                    let rel = (cost - nc) / cost.max(1e-300);
                    a = na;
                    b = nb;
                    cost = nc;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = rel > 1e-15;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(CurveParameters { a, b })
}

/// Per-point `(rho, sigma)`: distance to the nearest neighbor and the
/// bandwidth whose membership sum equals `log2(n_neighbors)`.
fn smooth_knn_distances(dists: &[Vec<f64>], n_neighbors: usize) -> Vec<(f64, f64)> {
    let target = (n_neighbors as f64).log2();
    let all_mean = {
        let (s, c) = dists
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, c), &d| (s + d, c + 1));
        if c > 0 {
            s / c as f64
        } else {
            0.0
        }
    };
    dists
        .iter()
        .map(|row| {
            let rho = row.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
            let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
            for _ in 0..SMOOTH_STEPS {
                let psum: f64 = row
                    .iter()
                    .map(|&d| {
                        let t = d - rho;
                        if t > 0.0 {
                            (-t / mid).exp()
                        } else {
                            1.0
                        }
                    })
                    .sum();
                if (psum - target).abs() < SMOOTH_TOL {
                    break;
                }
                if psum > target {
                    hi = mid;
                    mid = (lo + hi) / 2.0;
                } else {
                    lo = mid;
                    mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
                }
            }
            let row_mean = row.iter().sum::<f64>() / row.len().max(1) as f64;
            let floor = if rho > 0.0 {
                MIN_K_DIST_SCALE * row_mean
            } else {
                MIN_K_DIST_SCALE * all_mean
            };
            (rho, mid.max(floor))
        })
        .collect()
}

/// Symmetric fuzzy membership graph as a directed edge list containing both
/// `(i, j)` and `(j, i)`, combined with the probabilistic union `p + q - pq`.
fn fuzzy_edges(x: &EmbeddingMatrix, n_neighbors: usize) -> Result<Vec<(usize, usize, f64)>> {
    let n = x.n();
    if n_neighbors < 2 || n_neighbors > n {
        return Err(Error::KTooLarge {
            k: n_neighbors,
            max: n,
        });
    }
    // The neighborhood counts the point itself.
    let graph = build_knn_graph(x, n_neighbors - 1, MetricSpec::EUCLIDEAN, false)?;
    let sorted: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut v = graph.neighbors(i).to_vec();
            v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            v
        })
        .collect();
    let dists: Vec<Vec<f64>> = sorted.iter().map(|v| v.iter().map(|e| e.1).collect()).collect();
    let bandwidth = smooth_knn_distances(&dists, n_neighbors);

    let mut pairs: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (i, row) in sorted.iter().enumerate() {
        let (rho, sigma) = bandwidth[i];
        for &(j, d) in row {
            let t = d - rho;
            let w = if t <= 0.0 { 1.0 } else { (-t / sigma).exp() };
            let slot = pairs.entry((i.min(j), i.max(j))).or_insert((0.0, 0.0));
            if i < j {
                slot.0 = w;
            } else {
                slot.1 = w;
            }
        }
    }
    let mut edges = Vec::with_capacity(2 * pairs.len());
    for ((i, j), (p, q)) in pairs {
        let w = p + q - p * q;
        if w > 0.0 {
            edges.push((i, j, w));
            edges.push((j, i, w));
        }
    }
    Ok(edges)
}

fn initial_layout(x: &EmbeddingMatrix, cfg: &ReducerConfig) -> Result<Vec<f64>> {
    let (n, dims) = (x.n(), cfg.target_dims);
    let mut rng = cfg.seed.rng();
    let mut y = if dims <= (n - 1).min(x.d()) {
        pca(x, dims)?.to_f64()
    } else {
        (0..n * dims).map(|_| rng.random_range(-INIT_EXTENT..INIT_EXTENT)).collect()
    };
    // Rescale each coordinate to [0, 10], then jitter.
    for c in 0..dims {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            lo = lo.min(y[i * dims + c]);
            hi = hi.max(y[i * dims + c]);
        }
        let span = hi - lo;
        for i in 0..n {
            let v = &mut y[i * dims + c];
            *v = if span > 0.0 { INIT_EXTENT * (*v - lo) / span } else { 0.0 };
        }
    }
    let noise = Normal::new(0.0, INIT_NOISE).expect("valid std");
    for v in y.iter_mut() {
        *v += noise.sample(&mut rng);
    }
    Ok(y)
}

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// UMAP embedding of `x`. The layout loop is sequential so results are
/// bit-identical for a given seed.
pub fn umap(x: &EmbeddingMatrix, cfg: &ReducerConfig) -> Result<EmbeddingMatrix> {
    let n = x.n();
    let dims = cfg.target_dims;
    let CurveParameters { a, b } = fit_curve_parameters(cfg.min_dist)?;
    let mut edges = fuzzy_edges(x, cfg.n_neighbors)?;
    let n_epochs = cfg.max_iter.max(1);

    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    edges.retain(|e| e.2 >= max_w / n_epochs as f64);
    let epochs_per_sample: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let epochs_per_negative: Vec<f64> = epochs_per_sample
        .iter()
        .map(|e| e / NEGATIVE_SAMPLE_RATE as f64)
        .collect();
    let mut next_sample = epochs_per_sample.clone();
    let mut next_negative = epochs_per_negative.clone();

    let mut y = initial_layout(x, cfg)?;
    let mut rng = cfg.seed.derive(1).rng();
    let mut grad = vec![0.0; dims];

    for epoch in 0..n_epochs {
        let alpha = 1.0 - epoch as f64 / n_epochs as f64;
        let e = epoch as f64;
        for (idx, &(i, j, _)) in edges.iter().enumerate() {
            if next_sample[idx] > e {
                continue;
            }
            let d2: f64 = (0..dims).map(|c| (y[i * dims + c] - y[j * dims + c]).powi(2)).sum();
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            for c in 0..dims {
                grad[c] = clip(coeff * (y[i * dims + c] - y[j * dims + c]));
            }
            for c in 0..dims {
                y[i * dims + c] += grad[c] * alpha;
                y[j * dims + c] -= grad[c] * alpha;
            }
            next_sample[idx] += epochs_per_sample[idx];

            let n_neg = ((e - next_negative[idx]) / epochs_per_negative[idx]).max(0.0) as usize;
            for _ in 0..n_neg {
                let other = rng.random_range(0..n);
                if other == i {
                    continue;
                }
                let d2: f64 = (0..dims)
                    .map(|c| (y[i * dims + c] - y[other * dims + c]).powi(2))
                    .sum();
                if d2 > 0.0 {
                    let coeff = 2.0 * REPULSION_STRENGTH * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0));
                    for c in 0..dims {
                        y[i * dims + c] += clip(coeff * (y[i * dims + c] - y[other * dims + c])) * alpha;
                    }
                } else {
                    for c in 0..dims {
                        y[i * dims + c] += GRAD_CLIP * alpha;
                    }
                }
            }
            next_negative[idx] += n_neg as f64 * epochs_per_negative[idx];
        }
    }
    EmbeddingMatrix::from_f64(n, dims, &y)
}
