//! K-medoids on a precomputed distance matrix: FasterPAM (total deviation)
//! and FasterMSC (average medoid silhouette). Both take eager swaps and
//! stop at a swap-local optimum.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, DistanceMatrix, RngSeed};
use crate::validity::silhouette_score;

/// How FasterMSC picks among its restarts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartSelection {
    /// Highest average medoid silhouette, the optimized objective.
    #[default]
    MedoidSilhouette,
    /// Highest full silhouette of the final labeling.
    FullSilhouette,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedoidConfig {
    pub k: usize,
    pub restarts: usize,
    /// Upper bound on full passes over the swap candidates.
    pub max_iter: usize,
    pub seed: RngSeed,
    #[serde(default)]
    pub selection: RestartSelection,
}

impl MedoidConfig {
    pub fn new(k: usize) -> Self {
        MedoidConfig {
            k,
            restarts: 10,
            max_iter: 10_000,
            seed: RngSeed(0),
            selection: RestartSelection::MedoidSilhouette,
        }
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_selection(mut self, selection: RestartSelection) -> Self {
        self.selection = selection;
        self
    }
}

#[derive(Debug, Clone)]
pub struct MedoidOutput {
    pub assignment: ClusterAssignment,
    /// Total deviation for FasterPAM, average medoid silhouette for FasterMSC.
    pub objective: f64,
    /// Objective after initialization and after every accepted swap of the
    /// winning restart.
    pub trace: Vec<f64>,
    pub best_restart: usize,
}

const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
struct Slot {
    /// Position in the medoid list.
    m: usize,
    d: f64,
}

const EMPTY: Slot = Slot {
    m: usize::MAX,
    d: f64::INFINITY,
};

/// The `N` nearest medoids of point `o`, ties to the lower medoid
/// position. A medoid always lists itself first.
fn nearest_slots<const N: usize>(dist: &DistanceMatrix, medoids: &[usize], o: usize) -> [Slot; N] {
    let mut out = [EMPTY; N];
    let mut keys = [f64::INFINITY; N];
    let row = dist.row(o);
    for (p, &m) in medoids.iter().enumerate() {
        let (key, d) = if m == o { (-1.0, 0.0) } else { (row[m], row[m]) };
        if let Some(pos) = keys.iter().position(|&k| key < k) {
            out[pos..].rotate_right(1);
            keys[pos..].rotate_right(1);
            out[pos] = Slot { m: p, d };
            keys[pos] = key;
        }
    }
    out
}

fn labels_for(dist: &DistanceMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..dist.n()).map(|o| nearest_slots::<1>(dist, medoids, o)[0].m).collect()
}

fn total_deviation(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..dist.n()).map(|o| nearest_slots::<1>(dist, medoids, o)[0].d).sum()
}

#[inline]
fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Loss of a point whose candidate distances are `x`, `y`, `z`: ratio of the
/// smallest to the second smallest.
#[inline]
fn loss3(x: f64, y: f64, z: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    if z < lo {
        ratio(z, lo)
    } else if z < hi {
        ratio(lo, z)
    } else {
        ratio(lo, hi)
    }
}

/// Average medoid silhouette: mean over points of `1 - d1/d2` where `d1`,
/// `d2` are the distances to the nearest and second nearest medoid.
pub fn medoid_silhouette(dist: &DistanceMatrix, medoids: &[usize]) -> Result<f64> {
    let n = dist.n();
    if medoids.len() < 2 || medoids.len() > n {
        return Err(Error::KOutOfRange {
            k: medoids.len(),
            min: 2,
            max: n,
        });
    }
    let loss: f64 = (0..n)
        .map(|o| {
            let [a, b] = nearest_slots::<2>(dist, medoids, o);
            ratio(a.d, b.d)
        })
        .sum();
    Ok(1.0 - loss / n as f64)
}

struct Run {
    medoids: Vec<usize>,
    objective: f64,
    trace: Vec<f64>,
}

fn initial_medoids(n: usize, k: usize, seed: RngSeed) -> Vec<usize> {
    sample(&mut seed.rng(), n, k).into_vec()
}

fn pam_run(dist: &DistanceMatrix, k: usize, max_iter: usize, seed: RngSeed) -> Run {
    let n = dist.n();
    if k == 1 {
        let (best, td) = (0..n)
            .map(|i| (i, dist.row(i).iter().sum::<f64>()))
            .fold((0, f64::INFINITY), |b, (i, s)| if s < b.1 { (i, s) } else { b });
        return Run {
            medoids: vec![best],
            objective: td,
            trace: vec![td],
        };
    }
    let mut medoids = initial_medoids(n, k, seed);
    let mut is_medoid = vec![false; n];
    medoids.iter().for_each(|&m| is_medoid[m] = true);
    let mut near: Vec<[Slot; 2]> = (0..n).map(|o| nearest_slots::<2>(dist, &medoids, o)).collect();
    let removal_loss = |near: &[[Slot; 2]]| {
        let mut loss = vec![0.0; k];
        for s in near {
            loss[s[0].m] += s[1].d - s[0].d;
        }
        loss
    };
    let mut loss = removal_loss(&near);
    let mut td: f64 = near.iter().map(|s| s[0].d).sum();
    let scale = td.abs().max(1.0);
    let mut trace = vec![td];
    if k == n {
        return Run { medoids, objective: td, trace };
    }

    let mut j = 0usize;
    let mut passes = 0usize;
    let mut since_swap = 0usize;
    let mut delta = vec![0.0; k];
    while passes < max_iter {
        if !is_medoid[j] {
            delta.copy_from_slice(&loss);
            let mut acc = 0.0;
            let row = dist.row(j);
            for (o, s) in near.iter().enumerate() {
                let dj = row[o];
                if dj < s[0].d {
                    acc += dj - s[0].d;
                    delta[s[0].m] += s[0].d - s[1].d;
                } else if dj < s[1].d {
                    delta[s[0].m] += dj - s[1].d;
                }
            }
            let (best_m, best) = delta
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |b, (m, &v)| if v < b.1 { (m, v) } else { b });
            let change = acc + best;
            if change < -IMPROVEMENT_EPS * scale {
                is_medoid[medoids[best_m]] = false;
                medoids[best_m] = j;
                is_medoid[j] = true;
                near = (0..n).map(|o| nearest_slots::<2>(dist, &medoids, o)).collect();
                loss = removal_loss(&near);
                td = near.iter().map(|s| s[0].d).sum();
                trace.push(td);
                since_swap = 0;
            }
        }
        since_swap += 1;
        j = (j + 1) % n;
        if j == 0 {
            passes += 1;
        }
        if since_swap >= n {
            break;
        }
    }
    Run { medoids, objective: td, trace }
}

fn msc_loss(near: &[[Slot; 3]]) -> f64 {
    near.iter().map(|s| ratio(s[0].d, s[1].d)).sum()
}

fn msc_run(dist: &DistanceMatrix, k: usize, max_iter: usize, seed: RngSeed) -> Run {
    let n = dist.n();
    let mut medoids = initial_medoids(n, k, seed);
    let mut is_medoid = vec![false; n];
    medoids.iter().for_each(|&m| is_medoid[m] = true);
    let mut near: Vec<[Slot; 3]> = (0..n).map(|o| nearest_slots::<3>(dist, &medoids, o)).collect();
    let mut loss = msc_loss(&near);
    let mut trace = vec![1.0 - loss / n as f64];

    let mut j = 0usize;
    let mut passes = 0usize;
    let mut since_swap = 0usize;
    let mut delta = vec![0.0; k];
    while passes < max_iter {
        if !is_medoid[j] {
            delta.iter_mut().for_each(|v| *v = 0.0);
            let mut acc = 0.0;
            let row = dist.row(j);
            for (o, s) in near.iter().enumerate() {
                let dj = row[o];
                let (d1, d2, d3) = (s[0].d, s[1].d, s[2].d);
                let old = ratio(d1, d2);
                let kept = loss3(d1, d2, dj);
                acc += kept - old;
                delta[s[0].m] += loss3(d2, d3, dj) - kept;
                delta[s[1].m] += loss3(d1, d3, dj) - kept;
            }
            let (best_m, best) = delta
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |b, (m, &v)| if v < b.1 { (m, v) } else { b });
            let change = acc + best;
            if change < -IMPROVEMENT_EPS * n as f64 {
                is_medoid[medoids[best_m]] = false;
                medoids[best_m] = j;
                is_medoid[j] = true;
                near = (0..n).map(|o| nearest_slots::<3>(dist, &medoids, o)).collect();
                loss = msc_loss(&near);
                trace.push(1.0 - loss / n as f64);
                since_swap = 0;
            }
        }
        since_swap += 1;
        j = (j + 1) % n;
        if j == 0 {
            passes += 1;
        }
        if since_swap >= n {
            break;
        }
    }
    Run {
        medoids,
        objective: 1.0 - loss / n as f64,
        trace,
    }
}

fn finish(dist: &DistanceMatrix, runs: Vec<Run>, best: usize, k: usize) -> Result<MedoidOutput> {
    let run = runs.into_iter().nth(best).expect("restart index in range");
    let labels = labels_for(dist, &run.medoids);
    let assignment = ClusterAssignment::new(labels, k)?.with_medoids(run.medoids)?;
    Ok(MedoidOutput {
        assignment,
        objective: run.objective,
        trace: run.trace,
        best_restart: best,
    })
}

/// FasterPAM minimizing the total deviation, best of `restarts` random
/// initializations.
pub fn fasterpam_with_trace(dist: &DistanceMatrix, cfg: &MedoidConfig) -> Result<MedoidOutput> {
    let n = dist.n();
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::KTooLarge { k: cfg.k, max: n });
    }
    let runs: Vec<Run> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| pam_run(dist, cfg.k, cfg.max_iter, cfg.seed.derive(r as u64)))
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.objective < runs[best].objective {
            best = r;
        }
    }
    finish(dist, runs, best, cfg.k)
}

pub fn fasterpam(dist: &DistanceMatrix, cfg: &MedoidConfig) -> Result<ClusterAssignment> {
    Ok(fasterpam_with_trace(dist, cfg)?.assignment)
}

/// FasterMSC maximizing the average medoid silhouette. Restarts are ranked
/// by `cfg.selection`.
pub fn fastermsc_with_trace(dist: &DistanceMatrix, cfg: &MedoidConfig) -> Result<MedoidOutput> {
    let n = dist.n();
    if cfg.k < 2 || cfg.k + 1 > n {
        return Err(Error::KOutOfRange {
            k: cfg.k,
            min: 2,
            max: n.saturating_sub(1),
        });
    }
    let runs: Vec<Run> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| msc_run(dist, cfg.k, cfg.max_iter, cfg.seed.derive(r as u64)))
        .collect();
    let scores: Vec<f64> = match cfg.selection {
        RestartSelection::MedoidSilhouette => runs.iter().map(|r| r.objective).collect(),
        RestartSelection::FullSilhouette => runs
            .par_iter()
            .map(|r| {
                let a = ClusterAssignment::new(labels_for(dist, &r.medoids), cfg.k)?;
                silhouette_score(dist, &a)
            })
            .collect::<Result<_>>()?,
    };
    let mut best = 0;
    for (r, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = r;
        }
    }
    finish(dist, runs, best, cfg.k)
}

pub fn fastermsc(dist: &DistanceMatrix, cfg: &MedoidConfig) -> Result<ClusterAssignment> {
    Ok(fastermsc_with_trace(dist, cfg)?.assignment)
}

/// Total deviation of a medoid set: summed distance to the nearest medoid.
pub fn medoid_total_deviation(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    total_deviation(dist, medoids)
}
