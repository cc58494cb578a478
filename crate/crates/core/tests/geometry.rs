use owcluster::datasets::{helix, swiss_roll};
use owcluster::distance::{
    build_knn_graph, geodesic_distance_matrix, jeffreys_divergence, pairwise_distance_matrix, to_simplex,
    vector_distance, Metric, MetricSpec,
};
use owcluster::reduce::{isomap, l2_normalize, Pca};
use owcluster::stats::spearman;
use owcluster::{EmbeddingMatrix, RngSeed};
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = RngSeed(seed).rng();
    let v: Vec<f32> = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
    EmbeddingMatrix::new(n, d, v).unwrap()
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, unsorted.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

fn covariance(x: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    let (n, d) = (x.n(), x.d());
    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x.get(i, j) as f64).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|p| {
            (0..d)
                .map(|q| {
                    (0..n).map(|i| (x.get(i, p) as f64 - mean[p]) * (x.get(i, q) as f64 - mean[q])).sum::<f64>()
                        / (n - 1) as f64
                })
                .collect()
        })
        .collect()
}

#[test]
fn pca_variances_are_covariance_eigenvalues() {
    for seed in 0..50 {
        let mut rng = RngSeed(seed).rng();
        let n = rng.random_range(8..40);
        let d = rng.random_range(2..7);
        let x = random_matrix(n, d, seed + 1000);
        let dims = d.min(n - 1);
        let pca = Pca::fit(&x, dims).unwrap();
        let mut expected = jacobi_eigenvalues(covariance(&x));
        expected.sort_by(|a, b| b.total_cmp(a));
        // Variance of the data projected on each axis, in double precision.
        for c in 0..dims {
            let axis = &pca.components[c * d..(c + 1) * d];
            let proj: Vec<f64> = x
                .rows()
                .map(|r| r.iter().zip(axis).zip(&pca.mean).map(|((&v, a), m)| (v as f64 - m) * a).sum())
                .collect();
            let m = proj.iter().sum::<f64>() / n as f64;
            let var = proj.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((var - expected[c]).abs() < 1e-6, "seed {seed} axis {c}: {var} vs {}", expected[c]);
            assert!((pca.explained_variance[c] - expected[c]).abs() < 1e-6);
        }
    }
}

#[test]
fn pca_ignores_translation() {
    let x = random_matrix(30, 5, 4);
    let shifted = x.map(|v| v + 17.5).unwrap();
    let a = Pca::fit(&x, 3).unwrap().transform(&x).unwrap();
    let b = Pca::fit(&shifted, 3).unwrap().transform(&shifted).unwrap();
    for (u, v) in a.values().iter().zip(b.values()) {
        assert!((u - v).abs() < 1e-3, "{u} vs {v}");
    }
}

#[test]
fn geodesic_bounds_euclidean() {
    for seed in 0..20 {
        let x = random_matrix(40, 3, seed);
        let g = build_knn_graph(&x, 5, MetricSpec::EUCLIDEAN, true).unwrap();
        let geo = geodesic_distance_matrix(&g, &x).unwrap();
        let euc = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                assert!(geo.get(i, j) >= euc.get(i, j) - 1e-9);
            }
            for &(j, _) in g.neighbors(i) {
                assert!((geo.get(i, j) - euc.get(i, j)).abs() < 1e-9);
            }
        }
    }
}

fn upper(m: &owcluster::DistanceMatrix) -> Vec<f64> {
    let n = m.n();
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect()
}

#[test]
fn helix_geodesics_follow_arclength() {
    let (x, s) = helix(400, 3.0, 0.15);
    let g = build_knn_graph(&x, 10, MetricSpec::EUCLIDEAN, true).unwrap();
    let geo = geodesic_distance_matrix(&g, &x).unwrap();
    let euc = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
    let arc: Vec<f64> = (0..400).flat_map(|i| (i + 1..400).map(move |j| (i, j))).map(|(i, j)| (s[j] - s[i]).abs()).collect();
    let rho_geo = spearman(&upper(&geo), &arc);
    let rho_euc = spearman(&upper(&euc), &arc);
    assert!(rho_geo >= 0.99, "{rho_geo}");
    assert!(rho_euc < rho_geo, "{rho_euc} vs {rho_geo}");
}

#[test]
fn isomap_unrolls_swiss_roll() {
    let (x, t) = swiss_roll(500, 10.0, RngSeed(3));
    let y = isomap(&x, 2, 10).unwrap();
    let first: Vec<f64> = (0..500).map(|i| y.get(i, 0) as f64).collect();
    let rho = spearman(&first, &t).abs();
    assert!(rho > 0.95, "{rho}");
}

fn unit(v: Vec<f32>) -> Vec<f32> {
    let n = v.iter().map(|a| a * a).sum::<f32>().sqrt();
    v.iter().map(|a| a / n).collect()
}

proptest! {
    #[test]
    fn unit_vector_identity(a in prop::collection::vec(-10.0f32..10.0, 6), b in prop::collection::vec(-10.0f32..10.0, 6)) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-2) && b.iter().any(|v| v.abs() > 1e-2));
        let (a, b) = (unit(a), unit(b));
        let e = vector_distance(&a, &b, MetricSpec::EUCLIDEAN).unwrap();
        let cos = vector_distance(&a, &b, MetricSpec::new(Metric::Cosine)).unwrap();
        prop_assert!((e * e - 2.0 * cos).abs() < 1e-6);
    }

    #[test]
    fn jeffreys_symmetric_and_zero_on_self(a in prop::collection::vec(0.0f64..5.0, 5), b in prop::collection::vec(0.0f64..5.0, 5)) {
        let (p, q) = (to_simplex(&a), to_simplex(&b));
        let pq = jeffreys_divergence(&p, &q).unwrap();
        let qp = jeffreys_divergence(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() < 1e-9);
        prop_assert!(pq >= 0.0);
        prop_assert!(jeffreys_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn normalized_rows_have_unit_norm(v in prop::collection::vec(0.1f32..4.0, 12)) {
        let x = EmbeddingMatrix::new(3, 4, v).unwrap();
        let y = l2_normalize(&x).unwrap();
        for r in y.rows() {
            let n: f32 = r.iter().map(|a| a * a).sum::<f32>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-5);
        }
    }
}
