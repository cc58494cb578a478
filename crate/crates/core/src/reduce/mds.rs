use nalgebra::DMatrix;

use crate::distance::{build_knn_graph, geodesic_distance_matrix, MetricSpec};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_desc;
use crate::model::{DistanceMatrix, EmbeddingMatrix};

/// Classical (Torgerson) MDS: eigendecomposition of the double-centered
/// squared distances `-1/2 J D^2 J`. Negative eigenvalues are clamped to zero.
pub fn classical_mds(dist: &DistanceMatrix, dims: usize) -> Result<EmbeddingMatrix> {
    let n = dist.n();
    let max = n.saturating_sub(1);
    if dims == 0 || dims > max {
        return Err(Error::DimsTooLarge { dims, max });
    }
    let sq = DMatrix::from_fn(n, n, |i, j| dist.get(i, j).powi(2));
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand));
    let eig = symmetric_eigen_desc(b);
    let mut out = vec![0.0f64; n * dims];
    for c in 0..dims {
        let scale = eig.values[c].max(0.0).sqrt();
        for i in 0..n {
            out[i * dims + c] = eig.vectors[(i, c)] * scale;
        }
    }
    EmbeddingMatrix::from_f64(n, dims, &out)
}

/// Isomap: classical MDS on geodesic distances of the symmetrized
/// Euclidean kNN graph.
pub fn isomap(x: &EmbeddingMatrix, dims: usize, k: usize) -> Result<EmbeddingMatrix> {
    let graph = build_knn_graph(x, k, MetricSpec::EUCLIDEAN, true)?;
    let geo = geodesic_distance_matrix(&graph, x)?;
    classical_mds(&geo, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::pairwise_distance_matrix;

    fn embedded_distances(y: &EmbeddingMatrix) -> DistanceMatrix {
        pairwise_distance_matrix(y, MetricSpec::EUCLIDEAN).unwrap()
    }

    #[test]
    fn unit_square() {
        let s = 2f64.sqrt();
        let d = DistanceMatrix::new(
            4,
            vec![
                0.0, 1.0, s, 1.0, //
                1.0, 0.0, 1.0, s, //
                s, 1.0, 0.0, 1.0, //
                1.0, s, 1.0, 0.0,
            ],
        )
        .unwrap();
        let y = classical_mds(&d, 2).unwrap();
        let e = embedded_distances(&y);
        for (a, b) in d.values().iter().zip(e.values()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn two_points_keep_separation() {
        let d = DistanceMatrix::new(2, vec![0.0, 3.5, 3.5, 0.0]).unwrap();
        let y = classical_mds(&d, 1).unwrap();
        assert!(((y.get(0, 0) - y.get(1, 0)).abs() as f64 - 3.5).abs() < 1e-6);
    }

    #[test]
    fn realizable_input_is_reproduced() {
        let pts = [[0.0f32, 0.0, 0.0], [1.0, 2.0, 0.5], [-1.0, 0.3, 2.0], [2.0, -1.0, 1.0], [0.5, 0.5, -1.5]];
        let x = EmbeddingMatrix::from_rows(&pts).unwrap();
        let d = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
        let y = classical_mds(&d, 3).unwrap();
        let e = embedded_distances(&y);
        for (a, b) in d.values().iter().zip(e.values()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn isomap_is_mds_of_geodesics() {
        let pts: Vec<[f32; 2]> = (0..30).map(|i| [(i % 6) as f32, (i / 6) as f32 * 1.3]).collect();
        let x = EmbeddingMatrix::from_rows(&pts).unwrap();
        let direct = isomap(&x, 2, 4).unwrap();
        let g = build_knn_graph(&x, 4, MetricSpec::EUCLIDEAN, true).unwrap();
        let two_step = classical_mds(&geodesic_distance_matrix(&g, &x).unwrap(), 2).unwrap();
        assert_eq!(direct, two_step);
    }
}
