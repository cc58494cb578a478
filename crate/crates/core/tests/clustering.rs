use owcluster::cluster::{cluster, kmeans, EngineConfig, EngineKind, KMeansConfig};
use owcluster::datasets::{gaussian_blobs, BlobSpec};
use owcluster::distance::{pairwise_distance_matrix, MetricSpec};
use owcluster::external::{ari, clustering_accuracy, nmi, ContingencyTable};
use owcluster::pseudo::core_percentile_labels;
use owcluster::reduce::{l2_normalize, reduce, ReducerConfig, ReducerKind};
use owcluster::selection::{bayes_estimate, sweep_estimate, BayesOptConfig};
use owcluster::validity::{calinski_harabasz, davies_bouldin, silhouette_score};
use owcluster::{ClusterAssignment, EmbeddingMatrix, LabelVector, RngSeed};
use proptest::prelude::*;

fn relabel(a: &ClusterAssignment, perm: &[usize]) -> ClusterAssignment {
    ClusterAssignment::new(a.labels().iter().map(|&l| perm[l]).collect(), a.k()).unwrap()
}

fn rotate(x: &EmbeddingMatrix, angle: f64) -> EmbeddingMatrix {
    let (s, c) = angle.sin_cos();
    let mut v = x.to_f64();
    for row in v.chunks_mut(x.d()) {
        let (a, b) = (row[0], row[1]);
        row[0] = c * a - s * b;
        row[1] = s * a + c * b;
    }
    EmbeddingMatrix::from_f64(x.n(), x.d(), &v).unwrap()
}

#[test]
fn tsne_separates_blobs() {
    for seed in 0..5 {
        let (x, truth) = gaussian_blobs(&BlobSpec::new(300, 16, 3, 10.0, 1.0, seed));
        let y = reduce(&x, &ReducerConfig::defaults(ReducerKind::Tsne).with_seed(RngSeed(seed))).unwrap();
        assert_eq!((y.n(), y.d()), (300, 2));
        let a = kmeans(&y, &KMeansConfig::new(3).with_n_init(10)).unwrap();
        assert_eq!(clustering_accuracy(&a, &truth).unwrap(), 1.0, "seed {seed}");
    }
}

fn mean_distance(y: &EmbeddingMatrix, a: &[usize], b: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for &i in a {
        for &j in b {
            if i != j {
                total += y.row(i).iter().zip(y.row(j)).map(|(p, q)| ((p - q) as f64).powi(2)).sum::<f64>().sqrt();
                count += 1;
            }
        }
    }
    total / count as f64
}

#[test]
fn umap_keeps_blobs_apart() {
    for seed in 0..5 {
        let (x, truth) = gaussian_blobs(&BlobSpec::new(300, 16, 3, 10.0, 1.0, seed));
        let y = reduce(&l2_normalize(&x).unwrap(), &ReducerConfig::defaults(ReducerKind::Umap).with_seed(RngSeed(seed))).unwrap();
        assert_eq!((y.n(), y.d()), (300, 3));
        let groups: Vec<Vec<usize>> = (0..3u32).map(|g| (0..300).filter(|&i| truth.as_slice()[i] == g).collect()).collect();
        for p in 0..3 {
            for q in p + 1..3 {
                let between = mean_distance(&y, &groups[p], &groups[q]);
                assert!(mean_distance(&y, &groups[p], &groups[p]) < between, "seed {seed}");
                assert!(mean_distance(&y, &groups[q], &groups[q]) < between, "seed {seed}");
            }
        }
        let a = kmeans(&y, &KMeansConfig::new(3).with_n_init(10)).unwrap();
        assert_eq!(clustering_accuracy(&a, &truth).unwrap(), 1.0, "seed {seed}");
    }
}

#[test]
fn reducers_are_deterministic() {
    let (x, _) = gaussian_blobs(&BlobSpec::new(90, 8, 3, 6.0, 1.0, 9));
    for kind in [ReducerKind::Tsne, ReducerKind::Umap] {
        let cfg = ReducerConfig::defaults(kind).with_seed(RngSeed(4)).with_max_iter(300);
        assert_eq!(reduce(&x, &cfg).unwrap(), reduce(&x, &cfg).unwrap());
    }
}

#[test]
fn medoid_engines_accept_any_distance() {
    let (x, truth) = gaussian_blobs(&BlobSpec::new(120, 6, 3, 10.0, 0.5, 3));
    for metric in ["geodesic:10", "jeffreys", "normalized-cosine", "manhattan"] {
        let cfg = EngineConfig::new(EngineKind::FasterMsc).with_metric(metric.parse().unwrap());
        let a = cluster(&x, 3, &cfg).unwrap();
        assert_eq!(clustering_accuracy(&a, &truth).unwrap(), 1.0, "{metric}");
    }
}

#[test]
fn estimators_report_recomputable_silhouettes() {
    let (x, _) = gaussian_blobs(&BlobSpec::new(200, 5, 4, 8.0, 1.0, 6));
    let engine = EngineConfig::kmeans().with_n_init(5);
    let d = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
    let sweep = sweep_estimate(&x, 2, 12, &engine).unwrap();
    let bayes = bayes_estimate(&x, &BayesOptConfig::new(2, 12, 5), &engine).unwrap();
    for r in [&sweep, &bayes] {
        assert_eq!(r.best_labels.k(), r.best_k);
        assert!((silhouette_score(&d, &r.best_labels).unwrap() - r.best_sil).abs() < 1e-12);
    }
    assert_eq!(sweep.trace.len(), 11);
    assert_eq!(bayes.trace.len(), 5);
    assert!(bayes.best_sil <= sweep.best_sil);
}

#[test]
fn core_labels_are_cleaner_on_overlapping_blobs() {
    for seed in 0..20 {
        let (x, truth) = gaussian_blobs(&BlobSpec::new(600, 2, 4, 4.0, 1.0, seed));
        let a = kmeans(&x, &KMeansConfig::new(4).with_n_init(10).with_seed(RngSeed(seed))).unwrap();
        let full = core_percentile_labels(&x, &a, 1.0).unwrap().accuracy(&truth).unwrap();
        let core = core_percentile_labels(&x, &a, 0.25).unwrap().accuracy(&truth).unwrap();
        assert!(full < 1.0, "seed {seed}: blobs do not overlap");
        assert!(core >= full, "seed {seed}: {core} < {full}");
    }
}

#[test]
fn separated_blobs_give_clean_pseudo_labels() {
    let (x, truth) = gaussian_blobs(&BlobSpec::new(200, 6, 4, 10.0, 0.3, 8));
    let a = kmeans(&x, &KMeansConfig::new(4).with_n_init(5)).unwrap();
    let p = core_percentile_labels(&x, &a, 0.5).unwrap();
    assert_eq!(p.accuracy(&truth).unwrap(), 1.0);
    assert_eq!(p.len(), 100);
}

fn blob_case() -> impl Strategy<Value = (u64, Vec<usize>)> {
    (0u64..1000, Just((0..4usize).collect::<Vec<_>>()).prop_shuffle())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relabeling_leaves_scores_unchanged((seed, perm) in blob_case()) {
        let (x, truth) = gaussian_blobs(&BlobSpec::new(60, 3, 4, 3.0, 1.0, seed));
        let a = kmeans(&x, &KMeansConfig::new(4).with_n_init(3).with_seed(RngSeed(seed))).unwrap();
        let b = relabel(&a, &perm);
        prop_assert_eq!(clustering_accuracy(&a, &truth).unwrap(), clustering_accuracy(&b, &truth).unwrap());
        prop_assert!((nmi(&a, &truth).unwrap() - nmi(&b, &truth).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&a, &truth).unwrap() - ari(&b, &truth).unwrap()).abs() < 1e-12);
        let shuffled_truth = LabelVector(truth.as_slice().iter().map(|&t| perm[t as usize] as u32 + 10).collect());
        prop_assert!((nmi(&a, &shuffled_truth).unwrap() - nmi(&a, &truth).unwrap()).abs() < 1e-12);

        let d = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
        prop_assert!((silhouette_score(&d, &a).unwrap() - silhouette_score(&d, &b).unwrap()).abs() < 1e-12);
        let (c1, c2) = (calinski_harabasz(&x, &a).unwrap(), calinski_harabasz(&x, &b).unwrap());
        prop_assert!((c1 - c2).abs() <= 1e-9 * c1);
        prop_assert!((davies_bouldin(&x, &a).unwrap() - davies_bouldin(&x, &b).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn silhouette_ignores_scale(seed in 0u64..1000, c in 0.01f64..100.0) {
        let (x, _) = gaussian_blobs(&BlobSpec::new(40, 3, 3, 4.0, 1.0, seed));
        let a = kmeans(&x, &KMeansConfig::new(3).with_n_init(2)).unwrap();
        let d = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
        let s1 = silhouette_score(&d, &a).unwrap();
        let s2 = silhouette_score(&d.scaled(c), &a).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-9);
    }

    #[test]
    fn dbi_ignores_scale_and_chi_ignores_rotation(seed in 0u64..1000, c in 0.1f32..10.0, angle in 0.0f64..std::f64::consts::TAU) {
        let (x, _) = gaussian_blobs(&BlobSpec::new(40, 3, 3, 4.0, 1.0, seed));
        let a = kmeans(&x, &KMeansConfig::new(3).with_n_init(2)).unwrap();
        let scaled = x.map(|v| v * c).unwrap();
        let (d1, d2) = (davies_bouldin(&x, &a).unwrap(), davies_bouldin(&scaled, &a).unwrap());
        prop_assert!((d1 - d2).abs() <= 1e-6 * d1);
        let (c1, c2) = (calinski_harabasz(&x, &a).unwrap(), calinski_harabasz(&rotate(&x, angle), &a).unwrap());
        prop_assert!((c1 - c2).abs() <= 1e-6 * c1);
    }

    #[test]
    fn kept_sets_grow_with_percentile(seed in 0u64..1000, p in 0.01f64..1.0, q in 0.01f64..1.0) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let (x, _) = gaussian_blobs(&BlobSpec::new(50, 2, 3, 2.0, 1.0, seed));
        let a = kmeans(&x, &KMeansConfig::new(3).with_n_init(2)).unwrap();
        let small = core_percentile_labels(&x, &a, lo).unwrap();
        let large = core_percentile_labels(&x, &a, hi).unwrap();
        prop_assert!(small.kept_indices.iter().all(|i| large.kept_indices.contains(i)));
    }

    #[test]
    fn nmi_and_ari_are_symmetric(a in prop::collection::vec(0u32..4, 30), b in prop::collection::vec(0u32..5, 30)) {
        let t = ContingencyTable::from_ids(&a, &b).unwrap();
        let r = ContingencyTable::from_ids(&b, &a).unwrap();
        prop_assert!((t.nmi() - r.nmi()).abs() < 1e-12);
        prop_assert!((t.ari() - r.ari()).abs() < 1e-12);
        let largest = *t.counts.iter().max().unwrap() as f64 / 30.0;
        prop_assert!(t.matched_accuracy() >= largest);
    }
}
