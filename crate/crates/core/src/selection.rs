//! Choosing the number of clusters by silhouette: an exhaustive sweep and a
//! Gaussian-process Bayesian optimization over integer `k`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::cluster::{Clusterer, EngineConfig};
use crate::distance::{pairwise_distance_matrix, MetricSpec};
use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, DistanceMatrix, EmbeddingMatrix, RngSeed};
use crate::validity::silhouette_score;

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub best_k: usize,
    pub best_labels: ClusterAssignment,
    pub best_sil: f64,
    /// `(k, silhouette)` in evaluation order.
    pub trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesOptConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Total silhouette evaluations, initial design included.
    pub budget: usize,
    pub init_points: usize,
    pub seed: RngSeed,
}

impl BayesOptConfig {
    pub fn new(k_min: usize, k_max: usize, budget: usize) -> Self {
        BayesOptConfig {
            k_min,
            k_max,
            budget,
            init_points: 3,
            seed: RngSeed(0),
        }
    }
}

fn check_range(n: usize, k_min: usize, k_max: usize) -> Result<()> {
    if k_min < 2 || k_min > k_max || k_max + 1 > n {
        return Err(Error::BadRange { k_min, k_max, n });
    }
    Ok(())
}

/// Clusters at a given `k` and scores the result by silhouette on Euclidean
/// distances of the clustered data.
struct Evaluator<'a> {
    clusterer: Clusterer<'a>,
    distances: DistanceMatrix,
}

impl<'a> Evaluator<'a> {
    fn new(y: &'a EmbeddingMatrix, engine: &EngineConfig) -> Result<Self> {
        Ok(Evaluator {
            clusterer: Clusterer::new(y, engine.clone())?,
            distances: pairwise_distance_matrix(y, MetricSpec::EUCLIDEAN)?,
        })
    }

    fn evaluate(&self, k: usize) -> Result<(ClusterAssignment, f64)> {
        let a = self.clusterer.fit(k)?;
        let s = silhouette_score(&self.distances, &a)?;
        Ok((a, s))
    }
}

/// Index of the best score, ties toward the smaller `k`.
fn best_of(evaluated: &[(usize, ClusterAssignment, f64)]) -> usize {
    let mut best = 0;
    for (i, e) in evaluated.iter().enumerate() {
        let b = &evaluated[best];
        if e.2 > b.2 || (e.2 == b.2 && e.0 < b.0) {
            best = i;
        }
    }
    best
}

fn into_result(mut evaluated: Vec<(usize, ClusterAssignment, f64)>) -> SweepResult {
    let trace = evaluated.iter().map(|e| (e.0, e.2)).collect();
    let best = best_of(&evaluated);
    let (best_k, best_labels, best_sil) = evaluated.swap_remove(best);
    SweepResult {
        best_k,
        best_labels,
        best_sil,
        trace,
    }
}

/// Clusters at every `k` in `[k_min, k_max]` and keeps the highest
/// silhouette.
pub fn sweep_estimate(y: &EmbeddingMatrix, k_min: usize, k_max: usize, engine: &EngineConfig) -> Result<SweepResult> {
    check_range(y.n(), k_min, k_max)?;
    let eval = Evaluator::new(y, engine)?;
    let evaluated: Vec<(usize, ClusterAssignment, f64)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| eval.evaluate(k).map(|(a, s)| (k, a, s)))
        .collect::<Result<_>>()?;
    Ok(into_result(evaluated))
}

const GP_NOISE: f64 = 1e-6;
const ACQUISITION_GRID: usize = 2001;

fn matern52(r: f64, length: f64) -> f64 {
    let s = 5f64.sqrt() * r / length;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Zero-mean GP with unit signal variance on standardized targets.
struct Surrogate {
    xs: Vec<f64>,
    length: f64,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
}

impl Surrogate {
    fn fit_with_length(xs: &[f64], ys: &DVector<f64>, length: f64) -> Option<(Self, f64)> {
        let n = xs.len();
        let k = DMatrix::from_fn(n, n, |i, j| {
            matern52((xs[i] - xs[j]).abs(), length) + if i == j { GP_NOISE } else { 0.0 }
        });
        let chol = k.cholesky()?;
        let alpha = chol.solve(ys);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let lml = -0.5 * ys.dot(&alpha) - log_det;
        Some((
            Surrogate {
                xs: xs.to_vec(),
                length,
                chol,
                alpha,
            },
            lml,
        ))
    }

    /// Length scale chosen by marginal likelihood over a log grid.
    fn fit(xs: &[f64], ys: &DVector<f64>) -> Self {
        let mut best: Option<(Surrogate, f64)> = None;
        for i in 0..41 {
            let length = 10f64.powf(-2.0 + 3.0 * i as f64 / 40.0);
            if let Some((s, lml)) = Self::fit_with_length(xs, ys, length) {
                if best.as_ref().is_none_or(|b| lml > b.1) {
                    best = Some((s, lml));
                }
            }
        }
        best.expect("noise term keeps the kernel matrix positive definite").0
    }

    fn predict(&self, x: f64) -> (f64, f64) {
        let ks = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|&xi| matern52((x - xi).abs(), self.length)));
        let mean = ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).expect("triangular factor is invertible");
        let var = (1.0 - v.norm_squared()).max(1e-12);
        (mean, var.sqrt())
    }
}

fn expected_improvement(mean: f64, sd: f64, best: f64, normal: &Normal) -> f64 {
    let z = (mean - best) / sd;
    (mean - best) * normal.cdf(z) + sd * normal.pdf(z)
}

/// The free integer nearest to `target`, searching outward and preferring
/// the lower side on ties.
fn nearest_free(target: usize, lo: usize, hi: usize, taken: &[bool]) -> Option<usize> {
    for step in 0..=(hi - lo) {
        if target >= lo + step && !taken[target - step - lo] {
            return Some(target - step);
        }
        if target + step <= hi && !taken[target + step - lo] {
            return Some(target + step);
        }
    }
    None
}

/// Bayesian optimization of silhouette over integer `k`. Evaluates exactly
/// `budget` distinct values, starting from `init_points` evenly spaced ones,
/// then maximizing expected improvement of a Matern-5/2 surrogate.
pub fn bayes_estimate(y: &EmbeddingMatrix, cfg: &BayesOptConfig, engine: &EngineConfig) -> Result<SweepResult> {
    let (lo, hi) = (cfg.k_min, cfg.k_max);
    check_range(y.n(), lo, hi)?;
    let candidates = hi - lo + 1;
    if cfg.init_points == 0 || cfg.budget <= cfg.init_points || cfg.budget > candidates {
        return Err(Error::BudgetTooSmall {
            budget: cfg.budget,
            init_points: cfg.init_points,
            candidates,
        });
    }
    let eval = Evaluator::new(y, engine)?;
    let span = (hi - lo).max(1) as f64;
    let scale = |k: usize| (k - lo) as f64 / span;
    let mut taken = vec![false; candidates];
    let mut evaluated: Vec<(usize, ClusterAssignment, f64)> = Vec::with_capacity(cfg.budget);

    let init: Vec<usize> = (0..cfg.init_points)
        .map(|i| {
            if cfg.init_points == 1 {
                lo + (hi - lo) / 2
            } else {
                lo + ((i * (hi - lo)) as f64 / (cfg.init_points - 1) as f64).round() as usize
            }
        })
        .collect();
    for k in init {
        let Some(k) = nearest_free(k, lo, hi, &taken) else { break };
        taken[k - lo] = true;
        let (a, s) = eval.evaluate(k)?;
        evaluated.push((k, a, s));
    }

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    while evaluated.len() < cfg.budget {
        let raw: Vec<f64> = evaluated.iter().map(|e| e.2).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / raw.len() as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        let ys = DVector::from_iterator(raw.len(), raw.iter().map(|v| (v - mean) / sd));
        let xs: Vec<f64> = evaluated.iter().map(|e| scale(e.0)).collect();
        let gp = Surrogate::fit(&xs, &ys);
        let incumbent = ys.max();

        let mut best_x = 0.0;
        let mut best_ei = f64::NEG_INFINITY;
        for g in 0..ACQUISITION_GRID {
            let x = g as f64 / (ACQUISITION_GRID - 1) as f64;
            let (m, s) = gp.predict(x);
            let ei = expected_improvement(m, s, incumbent, &normal);
            if ei > best_ei {
                best_ei = ei;
                best_x = x;
            }
        }
        let target = lo + (best_x * span).round() as usize;
        let k = nearest_free(target.min(hi), lo, hi, &taken).expect("budget never exceeds the candidate count");
        taken[k - lo] = true;
        let (a, s) = eval.evaluate(k)?;
        evaluated.push((k, a, s));
    }
    Ok(into_result(evaluated))
}
