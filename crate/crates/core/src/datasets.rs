//! Synthetic data with known structure: Gaussian blobs, a helix and a
//! swiss roll.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{EmbeddingMatrix, LabelVector, RngSeed};

/// Isotropic Gaussian blobs. With `centers <= dims` the centers sit on
/// scaled coordinate axes so that every pair is exactly `separation` apart;
/// otherwise centers are drawn from `N(0, separation^2 / 2)`.
#[derive(Debug, Clone)]
pub struct BlobSpec {
    pub n: usize,
    pub dims: usize,
    pub centers: usize,
    pub separation: f64,
    pub std: f64,
    pub seed: RngSeed,
}

impl BlobSpec {
    pub fn new(n: usize, dims: usize, centers: usize, separation: f64, std: f64, seed: u64) -> Self {
        BlobSpec {
            n,
            dims,
            centers,
            separation,
            std,
            seed: RngSeed(seed),
        }
    }
}

/// Points are assigned to blobs round-robin, so label `i % centers`.
pub fn gaussian_blobs(spec: &BlobSpec) -> (EmbeddingMatrix, LabelVector) {
    let mut rng = spec.seed.rng();
    let g = spec.centers.max(1);
    let d = spec.dims;
    let scale = spec.separation / std::f64::consts::SQRT_2;
    let centers: Vec<f64> = if g <= d {
        let mut c = vec![0.0; g * d];
        for j in 0..g {
            c[j * d + j] = scale;
        }
        c
    } else {
        let normal = Normal::new(0.0, scale).expect("valid std");
        (0..g * d).map(|_| normal.sample(&mut rng)).collect()
    };
    let noise = Normal::new(0.0, spec.std.max(0.0)).expect("valid std");
    let mut values = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let j = i % g;
        labels.push(j as u32);
        for c in 0..d {
            values.push((centers[j * d + c] + noise.sample(&mut rng)) as f32);
        }
    }
    (
        EmbeddingMatrix::new(spec.n, d, values).expect("finite blob data"),
        LabelVector(labels),
    )
}

/// Appends `extra` columns of `N(0, std^2)` noise.
pub fn with_noise_dims(x: &EmbeddingMatrix, extra: usize, std: f64, seed: RngSeed) -> EmbeddingMatrix {
    let mut rng = seed.rng();
    let normal = Normal::new(0.0, std).expect("valid std");
    let noise: Vec<f32> = (0..x.n() * extra).map(|_| normal.sample(&mut rng) as f32).collect();
    let noise = EmbeddingMatrix::new(x.n(), extra, noise).expect("finite noise");
    x.hstack(&noise).expect("same row count")
}

/// Multiplies each row by its own factor, log-uniform in `[min_scale, 1]`.
/// Mimics embeddings whose direction carries the class and whose norm does
/// not.
pub fn radial_scale(x: &EmbeddingMatrix, min_scale: f64, seed: RngSeed) -> EmbeddingMatrix {
    let mut rng = seed.rng();
    let lo = min_scale.ln();
    let mut values = Vec::with_capacity(x.values().len());
    for row in x.rows() {
        let s = (lo * (1.0 - rng.random::<f64>())).exp() as f32;
        values.extend(row.iter().map(|v| v * s));
    }
    EmbeddingMatrix::new(x.n(), x.d(), values).expect("scaled rows stay finite")
}

/// `n` points along `(cos t, sin t, pitch * t)` for `t` evenly spaced in
/// `[0, 2 pi turns]`. Returns the points and each point's arclength from
/// the first point.
pub fn helix(n: usize, turns: f64, pitch: f64) -> (EmbeddingMatrix, Vec<f64>) {
    let t_max = 2.0 * std::f64::consts::PI * turns;
    let speed = (1.0 + pitch * pitch).sqrt();
    let mut values = Vec::with_capacity(n * 3);
    let mut arclength = Vec::with_capacity(n);
    for i in 0..n {
        let t = t_max * i as f64 / (n.max(2) - 1) as f64;
        values.extend([t.cos() as f32, t.sin() as f32, (pitch * t) as f32]);
        arclength.push(speed * t);
    }
    (EmbeddingMatrix::new(n, 3, values).expect("finite helix"), arclength)
}

/// Swiss roll: a `[1.5 pi, 4.5 pi] x [0, height]` strip rolled into 3-D as
/// `(t cos t, h, t sin t)`. Returns the points and the roll parameter `t`.
pub fn swiss_roll(n: usize, height: f64, seed: RngSeed) -> (EmbeddingMatrix, Vec<f64>) {
    let mut rng = seed.rng();
    let pi = std::f64::consts::PI;
    let mut values = Vec::with_capacity(n * 3);
    let mut ts = Vec::with_capacity(n);
    for _ in 0..n {
        let t = 1.5 * pi * (1.0 + 2.0 * rng.random::<f64>());
        let h = height * rng.random::<f64>();
        values.extend([(t * t.cos()) as f32, h as f32, (t * t.sin()) as f32]);
        ts.push(t);
    }
    (EmbeddingMatrix::new(n, 3, values).expect("finite roll"), ts)
}
