//! Exact t-SNE with the O(n^2) gradient.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{pca, ReducerConfig};
use crate::error::{Error, Result};
use crate::model::EmbeddingMatrix;

const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;
const MOMENTUM_START: f64 = 0.5;
const MOMENTUM_FINAL: f64 = 0.8;
const BISECTION_STEPS: usize = 64;
const ENTROPY_TOL: f64 = 1e-5;
const MIN_GAIN: f64 = 0.01;
const MIN_GRAD_NORM: f64 = 1e-7;
const P_FLOOR: f64 = 1e-12;
const INIT_STD: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct TsneOutput {
    pub embedding: EmbeddingMatrix,
    /// Gaussian precision `1 / (2 sigma_i^2)` found for every point.
    pub betas: Vec<f64>,
    /// KL(P || Q) when exaggeration ends (or at the last iteration if earlier).
    pub kl_after_exaggeration: f64,
    pub kl_final: f64,
    pub iterations: usize,
}

fn squared_distances(x: &EmbeddingMatrix) -> Vec<f64> {
    let (n, d) = (x.n(), x.d());
    let rows = x.to_f64();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = &rows[i * d..(i + 1) * d];
            let rows = &rows;
            (0..n).map(move |j| {
                let b = &rows[j * d..(j + 1) * d];
                a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
            })
        })
        .collect()
}

/// Bisection on one row's precision so the conditional distribution has
/// entropy `ln(perplexity)` nats. Returns `(beta, row probabilities)`.
fn search_row(dist_row: &[f64], i: usize, log_perplexity: f64) -> (f64, Vec<f64>) {
    let n = dist_row.len();
    let dmin = dist_row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut beta = 1.0;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut p = vec![0.0; n];
    for _ in 0..BISECTION_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..n {
            if j == i {
                p[j] = 0.0;
                continue;
            }
            let shifted = dist_row[j] - dmin;
            let v = (-shifted * beta).exp();
            p[j] = v;
            sum += v;
            weighted += shifted * v;
        }
        let entropy = sum.ln() + beta * weighted / sum;
        let diff = entropy - log_perplexity;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_infinite() { beta * 2.0 } else { (beta + hi) / 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_infinite() { beta / 2.0 } else { (beta + lo) / 2.0 };
        }
    }
    // Recompute with the final beta so the returned row matches it exactly.
    let mut sum = 0.0;
    for j in 0..n {
        p[j] = if j == i { 0.0 } else { (-(dist_row[j] - dmin) * beta).exp() };
        sum += p[j];
    }
    p.iter_mut().for_each(|v| *v /= sum);
    (beta, p)
}

/// Row-stochastic conditional affinities `p_{j|i}` (row-major `n x n`) and
/// the precision of each row.
pub fn conditional_probabilities(x: &EmbeddingMatrix, perplexity: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_perplexity(x.n(), perplexity)?;
    let n = x.n();
    let dist = squared_distances(x);
    let log_perp = perplexity.ln();
    let rows: Vec<(f64, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| search_row(&dist[i * n..(i + 1) * n], i, log_perp))
        .collect();
    let mut betas = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n * n);
    for (b, row) in rows {
        betas.push(b);
        p.extend(row);
    }
    Ok((p, betas))
}

fn check_perplexity(n: usize, perplexity: f64) -> Result<()> {
    let needed = (3.0 * perplexity).ceil() as usize;
    if !(perplexity > 0.0) || n < needed || n < 2 {
        return Err(Error::PerplexityTooLarge {
            perplexity,
            needed: needed.max(2),
            n,
        });
    }
    Ok(())
}

fn initial_layout(x: &EmbeddingMatrix, cfg: &ReducerConfig) -> Result<Vec<f64>> {
    let (n, dims) = (x.n(), cfg.target_dims);
    if dims <= (n - 1).min(x.d()) {
        let y = pca(x, dims)?.to_f64();
        let mean = y.iter().step_by(dims).sum::<f64>() / n as f64;
        let var = y.iter().step_by(dims).map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if var > 0.0 {
            let scale = INIT_STD / var.sqrt();
            return Ok(y.into_iter().map(|v| v * scale).collect());
        }
    }
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let mut rng = cfg.seed.rng();
    Ok((0..n * dims).map(|_| normal.sample(&mut rng)).collect())
}

/// Kernel numerators `1 / (1 + |y_i - y_j|^2)` for one row.
fn row_kernel(y: &[f64], i: usize, n: usize, dims: usize, out: &mut [f64]) {
    let yi = &y[i * dims..(i + 1) * dims];
    for j in 0..n {
        if j == i {
            out[j] = 0.0;
            continue;
        }
        let yj = &y[j * dims..(j + 1) * dims];
        let d2: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
        out[j] = 1.0 / (1.0 + d2);
    }
}

fn kl_divergence(p: &[f64], y: &[f64], n: usize, dims: usize) -> f64 {
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut k = vec![0.0; n];
            row_kernel(y, i, n, dims, &mut k);
            let z: f64 = k.iter().sum();
            let plogk: f64 = (0..n)
                .filter(|&j| j != i && p[i * n + j] > 0.0)
                .map(|j| p[i * n + j] * (p[i * n + j] / k[j].max(f64::MIN_POSITIVE)).ln())
                .sum();
            (z, plogk)
        })
        .collect();
    let z: f64 = rows.iter().map(|r| r.0).sum();
    let total_p: f64 = p.iter().sum();
    // sum p ln(p / (k / Z)) = sum p ln(p / k) + ln(Z) * sum p
    rows.iter().map(|r| r.1).sum::<f64>() + z.ln() * total_p
}

/// t-SNE with diagnostics.
pub fn tsne_with_diagnostics(x: &EmbeddingMatrix, cfg: &ReducerConfig) -> Result<TsneOutput> {
    let n = x.n();
    let dims = cfg.target_dims;
    let (cond, betas) = conditional_probabilities(x, cfg.perplexity)?;
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / denom).max(P_FLOOR);
            }
        }
    }
    drop(cond);

    let mut y = initial_layout(x, cfg)?;
    let learning_rate = (n as f64 / EXAGGERATION).max(50.0);
    let mut update = vec![0.0; n * dims];
    let mut gains = vec![1.0f64; n * dims];
    let max_iter = cfg.max_iter.max(1);
    let mut kl_after_exaggeration = None;
    let mut iterations = 0;

    for it in 0..max_iter {
        let exaggerating = it < EXAGGERATION_ITERS;
        let exag = if exaggerating { EXAGGERATION } else { 1.0 };
        let momentum = if exaggerating { MOMENTUM_START } else { MOMENTUM_FINAL };

        let z: f64 = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut k = vec![0.0; n];
                row_kernel(&y, i, n, dims, &mut k);
                k.iter().sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        let grad: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut k = vec![0.0; n];
                row_kernel(&y, i, n, dims, &mut k);
                let yi = &y[i * dims..(i + 1) * dims];
                let mut g = vec![0.0; dims];
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let coeff = (exag * p[i * n + j] - k[j] / z) * k[j];
                    let yj = &y[j * dims..(j + 1) * dims];
                    for c in 0..dims {
                        g[c] += coeff * (yi[c] - yj[c]);
                    }
                }
                g.into_iter().map(|v| 4.0 * v)
            })
            .collect();

        for idx in 0..n * dims {
            gains[idx] = if update[idx] * grad[idx] < 0.0 {
                gains[idx] + 0.2
            } else {
                (gains[idx] * 0.8).max(MIN_GAIN)
            };
            update[idx] = momentum * update[idx] - learning_rate * gains[idx] * grad[idx];
            y[idx] += update[idx];
        }
        iterations = it + 1;

        if iterations == EXAGGERATION_ITERS {
            kl_after_exaggeration = Some(kl_divergence(&p, &y, n, dims));
        }
        if !exaggerating {
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < MIN_GRAD_NORM {
                break;
            }
        }
    }

    let kl_final = kl_divergence(&p, &y, n, dims);
    Ok(TsneOutput {
        embedding: EmbeddingMatrix::from_f64(n, dims, &y)?,
        betas,
        kl_after_exaggeration: kl_after_exaggeration.unwrap_or(kl_final),
        kl_final,
        iterations,
    })
}

/// Exact-gradient t-SNE embedding of `x` into `cfg.target_dims` dimensions.
pub fn tsne(x: &EmbeddingMatrix, cfg: &ReducerConfig) -> Result<EmbeddingMatrix> {
    Ok(tsne_with_diagnostics(x, cfg)?.embedding)
}
