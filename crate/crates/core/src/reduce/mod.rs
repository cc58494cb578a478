//! Dimension reduction: L2 normalization, PCA, classical MDS, Isomap,
//! exact t-SNE and UMAP.
//!
//! Every reducer is deterministic for a given [`ReducerConfig::seed`];
//! parallel loops only split independent per-row work.

mod mds;
mod pca;
mod tsne;
mod umap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distance::{pairwise_distance_matrix, MetricSpec};
use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, RngSeed};

pub use mds::{classical_mds, isomap};
pub use pca::{pca, Pca};
pub use tsne::{conditional_probabilities, tsne, tsne_with_diagnostics, TsneOutput};
pub use umap::{fit_curve_parameters, umap, CurveParameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReducerKind {
    None,
    Pca,
    Mds,
    Isomap,
    Tsne,
    Umap,
}

impl fmt::Display for ReducerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReducerKind::None => "none",
            ReducerKind::Pca => "pca",
            ReducerKind::Mds => "mds",
            ReducerKind::Isomap => "isomap",
            ReducerKind::Tsne => "tsne",
            ReducerKind::Umap => "umap",
        })
    }
}

impl FromStr for ReducerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "").as_str() {
            "none" => ReducerKind::None,
            "pca" => ReducerKind::Pca,
            "mds" => ReducerKind::Mds,
            "isomap" => ReducerKind::Isomap,
            "tsne" => ReducerKind::Tsne,
            "umap" => ReducerKind::Umap,
            _ => return Err(Error::InvalidConfig(format!("unknown reducer {s:?}"))),
        })
    }
}

/// Hyperparameters for every reducer. [`ReducerConfig::defaults`] gives the
/// standard settings for each method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducerConfig {
    pub method: ReducerKind,
    pub target_dims: usize,
    /// t-SNE effective neighbor count.
    pub perplexity: f64,
    /// UMAP neighborhood size (self included) and Isomap neighbor count.
    pub n_neighbors: usize,
    /// UMAP minimum embedded distance, in (0, 1).
    pub min_dist: f64,
    /// t-SNE gradient iterations, UMAP epochs.
    pub max_iter: usize,
    pub seed: RngSeed,
}

impl ReducerConfig {
    pub fn defaults(method: ReducerKind) -> Self {
        let base = ReducerConfig {
            method,
            target_dims: 2,
            perplexity: 30.0,
            n_neighbors: 10,
            min_dist: 0.1,
            max_iter: 0,
            seed: RngSeed(0),
        };
        match method {
            ReducerKind::None => base,
            ReducerKind::Pca => ReducerConfig {
                target_dims: 30,
                ..base
            },
            ReducerKind::Mds => ReducerConfig {
                target_dims: 24,
                ..base
            },
            ReducerKind::Isomap => ReducerConfig {
                target_dims: 32,
                ..base
            },
            ReducerKind::Tsne => ReducerConfig {
                target_dims: 2,
                max_iter: 10_000,
                ..base
            },
            ReducerKind::Umap => ReducerConfig {
                target_dims: 3,
                max_iter: 200,
                ..base
            },
        }
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dims(mut self, dims: usize) -> Self {
        self.target_dims = dims;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Scales every row to unit Euclidean norm.
pub fn l2_normalize(x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let d = x.d();
    let mut out = Vec::with_capacity(x.n() * d);
    for (i, row) in x.rows().enumerate() {
        let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroRow(i));
        }
        out.extend(row.iter().map(|&v| (v as f64 / norm) as f32));
    }
    EmbeddingMatrix::new(x.n(), d, out)
}

fn all_rows_identical(x: &EmbeddingMatrix) -> bool {
    let first = x.row(0);
    x.rows().all(|r| r == first)
}

/// Runs the configured reducer. Degenerate input (every row identical)
/// yields the all-zeros embedding.
pub fn reduce(x: &EmbeddingMatrix, cfg: &ReducerConfig) -> Result<EmbeddingMatrix> {
    if cfg.method == ReducerKind::None {
        return Ok(x.clone());
    }
    if cfg.target_dims == 0 || cfg.target_dims > x.d() {
        return Err(Error::DimsTooLarge {
            dims: cfg.target_dims,
            max: x.d(),
        });
    }
    if all_rows_identical(x) {
        return EmbeddingMatrix::new(x.n(), cfg.target_dims, vec![0.0; x.n() * cfg.target_dims]);
    }
    match cfg.method {
        ReducerKind::None => unreachable!(),
        ReducerKind::Pca => pca(x, cfg.target_dims),
        ReducerKind::Mds => {
            let d = pairwise_distance_matrix(x, MetricSpec::EUCLIDEAN)?;
            classical_mds(&d, cfg.target_dims)
        }
        ReducerKind::Isomap => isomap(x, cfg.target_dims, cfg.n_neighbors),
        ReducerKind::Tsne => tsne(x, cfg),
        ReducerKind::Umap => umap(x, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_three_four_five() {
        let x = EmbeddingMatrix::from_rows(&[[3.0f32, 4.0]]).unwrap();
        let y = l2_normalize(&x).unwrap();
        assert!((y.get(0, 0) - 0.6).abs() < 1e-7);
        assert!((y.get(0, 1) - 0.8).abs() < 1e-7);
    }

    #[test]
    fn normalize_is_idempotent_on_unit_rows() {
        let x = EmbeddingMatrix::from_rows(&[[1.0f32, 0.0, 0.0], [0.0, 0.6, 0.8]]).unwrap();
        let y = l2_normalize(&x).unwrap();
        for (a, b) in x.values().iter().zip(y.values()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn normalize_random_rows_have_unit_norm() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f32> = (0..100 * 7).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y = l2_normalize(&EmbeddingMatrix::new(100, 7, v).unwrap()).unwrap();
        for row in y.rows() {
            let mut s = 0.0f64;
            for &v in row {
                s += v as f64 * v as f64;
            }
            let norm = s.sqrt();
            assert!((1.0 - 1e-6..=1.0 + 1e-6).contains(&norm), "{norm}");
        }
    }

    #[test]
    fn normalize_rejects_zero_row() {
        let x = EmbeddingMatrix::from_rows(&[[1.0f32, 1.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(l2_normalize(&x), Err(Error::ZeroRow(1))));
    }

    #[test]
    fn reducer_defaults() {
        let t = ReducerConfig::defaults(ReducerKind::Tsne);
        assert_eq!((t.target_dims, t.perplexity, t.max_iter), (2, 30.0, 10_000));
        let u = ReducerConfig::defaults(ReducerKind::Umap);
        assert_eq!((u.target_dims, u.n_neighbors, u.min_dist), (3, 10, 0.1));
        assert_eq!(ReducerConfig::defaults(ReducerKind::Pca).target_dims, 30);
        assert_eq!(ReducerConfig::defaults(ReducerKind::Mds).target_dims, 24);
        assert_eq!(ReducerConfig::defaults(ReducerKind::Isomap).target_dims, 32);
    }

    #[test]
    fn identical_rows_reduce_to_zeros() {
        let x = EmbeddingMatrix::new(12, 4, vec![0.5; 48]).unwrap();
        for kind in [
            ReducerKind::Pca,
            ReducerKind::Mds,
            ReducerKind::Isomap,
            ReducerKind::Tsne,
            ReducerKind::Umap,
        ] {
            let cfg = ReducerConfig {
                perplexity: 3.0,
                ..ReducerConfig::defaults(kind).with_dims(2)
            };
            let y = reduce(&x, &cfg).unwrap();
            assert_eq!((y.n(), y.d()), (12, 2));
            assert!(y.values().iter().all(|&v| v == 0.0), "{kind}");
        }
    }

    #[test]
    fn too_many_dims_rejected() {
        let x = EmbeddingMatrix::new(5, 2, (0..10).map(|v| v as f32).collect()).unwrap();
        let cfg = ReducerConfig::defaults(ReducerKind::Pca);
        assert!(matches!(reduce(&x, &cfg), Err(Error::DimsTooLarge { .. })));
    }
}
