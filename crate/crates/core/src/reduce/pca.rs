use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_desc;
use crate::model::EmbeddingMatrix;

/// A fitted principal component projection.
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `dims x d` row-major principal axes, ordered by decreasing variance.
    pub components: Vec<f64>,
    /// Covariance eigenvalue (unbiased, `n - 1` denominator) of each axis.
    pub explained_variance: Vec<f64>,
}

impl Pca {
    pub fn fit(x: &EmbeddingMatrix, dims: usize) -> Result<Pca> {
        let (n, d) = (x.n(), x.d());
        let max = (n.saturating_sub(1)).min(d);
        if dims == 0 || dims > max {
            return Err(Error::DimsTooLarge { dims, max });
        }
        let mean = x.column_means();
        let centered = DMatrix::from_fn(n, d, |i, j| x.get(i, j) as f64 - mean[j]);
        let denom = (n - 1) as f64;
        let mut components = Vec::with_capacity(dims * d);
        let mut explained_variance = Vec::with_capacity(dims);
        if d <= n {
            let cov = centered.tr_mul(&centered) / denom;
            let eig = symmetric_eigen_desc(cov);
            for c in 0..dims {
                explained_variance.push(eig.values[c].max(0.0));
                components.extend(eig.vectors.column(c).iter());
            }
        } else {
            // Fewer rows than columns: diagonalize the n x n Gram matrix and
            // map its eigenvectors back to feature space.
            let gram = (&centered * centered.transpose()) / denom;
            let eig = symmetric_eigen_desc(gram);
            for c in 0..dims {
                let lambda = eig.values[c].max(0.0);
                explained_variance.push(lambda);
                let axis = centered.tr_mul(&eig.vectors.column(c).into_owned());
                let norm = axis.norm();
                let mut axis: Vec<f64> = if norm > 0.0 {
                    axis.iter().map(|v| v / norm).collect()
                } else {
                    vec![0.0; d]
                };
                let pivot = (0..d)
                    .max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()).then(b.cmp(&a)))
                    .unwrap_or(0);
                if axis[pivot] < 0.0 {
                    axis.iter_mut().for_each(|v| *v = -*v);
                }
                components.extend(axis);
            }
        }
        Ok(Pca {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn dims(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn transform(&self, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        let d = self.mean.len();
        if x.d() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: x.d(),
            });
        }
        let dims = self.dims();
        let mut out = Vec::with_capacity(x.n() * dims);
        for row in x.rows() {
            for c in 0..dims {
                let axis = &self.components[c * d..(c + 1) * d];
                let v: f64 = row
                    .iter()
                    .zip(&self.mean)
                    .zip(axis)
                    .map(|((&v, m), a)| (v as f64 - m) * a)
                    .sum();
                out.push(v);
            }
        }
        EmbeddingMatrix::from_f64(x.n(), dims, &out)
    }
}

/// Centers `x` and projects it onto its top `dims` principal axes.
pub fn pca(x: &EmbeddingMatrix, dims: usize) -> Result<EmbeddingMatrix> {
    Pca::fit(x, dims)?.transform(x)
}
