//! Vector dissimilarities, pairwise matrices, kNN graphs and geodesic
//! (graph shortest-path) distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, EmbeddingMatrix, KnnGraph};
use crate::reduce::l2_normalize;

/// Offset that keeps Jeffreys probability vectors strictly positive.
pub const JEFFREYS_EPSILON: f64 = 1e-12;

/// Neighbor count used for geodesic distances when none is given.
pub const DEFAULT_GEODESIC_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Chebyshev,
    /// `1 - cos(theta)`.
    Cosine,
    /// Symmetrized Kullback-Leibler divergence of the vectors mapped onto
    /// the probability simplex. Not a metric: no triangle inequality.
    Jeffreys,
    /// Shortest-path length over a symmetrized kNN graph with `k` neighbors.
    Geodesic { k: usize },
}

/// A metric plus the optional per-vector L2 normalization applied before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub metric: Metric,
    pub normalized: bool,
}

impl MetricSpec {
    pub const EUCLIDEAN: MetricSpec = MetricSpec {
        metric: Metric::Euclidean,
        normalized: false,
    };

    pub fn new(metric: Metric) -> Self {
        MetricSpec {
            metric,
            normalized: false,
        }
    }

    pub fn normalized(metric: Metric) -> Self {
        MetricSpec {
            metric,
            normalized: true,
        }
    }

    /// The pointwise metric used for graph edges. Geodesic graphs are built
    /// on Euclidean edges.
    pub fn edge_metric(self) -> MetricSpec {
        match self.metric {
            Metric::Geodesic { .. } => MetricSpec {
                metric: Metric::Euclidean,
                normalized: self.normalized,
            },
            _ => self,
        }
    }
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec::EUCLIDEAN
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.normalized {
            f.write_str("normalized-")?;
        }
        match self.metric {
            Metric::Euclidean => f.write_str("euclidean"),
            Metric::Manhattan => f.write_str("manhattan"),
            Metric::Chebyshev => f.write_str("chebyshev"),
            Metric::Cosine => f.write_str("cosine"),
            Metric::Jeffreys => f.write_str("jeffreys"),
            Metric::Geodesic { k } => write!(f, "geodesic:{k}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    /// Parses `[normalized-]NAME`, with `geodesic[:K]` for geodesic distances.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (normalized, name) = match lower.strip_prefix("normalized-") {
            Some(rest) => (true, rest),
            None => (false, lower.as_str()),
        };
        let metric = match name {
            "euclidean" | "l2" => Metric::Euclidean,
            "manhattan" | "l1" => Metric::Manhattan,
            "chebyshev" | "linf" => Metric::Chebyshev,
            "cosine" => Metric::Cosine,
            "jeffreys" => Metric::Jeffreys,
            "geodesic" => Metric::Geodesic {
                k: DEFAULT_GEODESIC_K,
            },
            other => match other.strip_prefix("geodesic:") {
                Some(k) => {
                    let k: usize = k
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad geodesic k in {s:?}")))?;
                    if k == 0 {
                        return Err(Error::InvalidConfig("geodesic k must be >= 1".into()));
                    }
                    Metric::Geodesic { k }
                }
                None => return Err(Error::InvalidConfig(format!("unknown metric {s:?}"))),
            },
        };
        Ok(MetricSpec { metric, normalized })
    }
}

fn unit_copy(v: &[f32], row: usize) -> Result<Vec<f64>> {
    let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroRow(row));
    }
    Ok(v.iter().map(|&x| x as f64 / norm).collect())
}

#[inline]
fn raw_distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    Ok(match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Metric::Chebyshev => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        Metric::Cosine => cosine_dissimilarity(a, b),
        Metric::Jeffreys => jeffreys_f64(a, b),
        Metric::Geodesic { .. } => return Err(Error::GeodesicNotPointwise),
    })
}

fn cosine_dissimilarity(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 && bb == 0.0 {
        return 0.0;
    }
    if aa == 0.0 || bb == 0.0 {
        return 1.0;
    }
    (1.0 - ab / (aa * bb).sqrt()).clamp(0.0, 2.0)
}

/// Maps a vector onto the probability simplex: entries are shifted so the
/// minimum is non-negative, offset by [`JEFFREYS_EPSILON`] and L1-normalized.
/// Vectors that are already non-negative are only offset and normalized.
pub fn to_simplex(v: &[f64]) -> Vec<f64> {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let mut p: Vec<f64> = v.iter().map(|&x| x - min + JEFFREYS_EPSILON).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

fn jeffreys_f64(a: &[f64], b: &[f64]) -> f64 {
    let p = to_simplex(a);
    let q = to_simplex(b);
    // D(p||q) + D(q||p) = sum (p - q) ln(p / q); each term is >= 0.
    p.iter()
        .zip(&q)
        .map(|(&pi, &qi)| (pi - qi) * (pi.ln() - qi.ln()))
        .sum::<f64>()
        .max(0.0)
}

/// Jeffreys divergence `D_KL(p||q) + D_KL(q||p)` after simplex conversion.
pub fn jeffreys_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(jeffreys_f64(p, q))
}

/// Dissimilarity between two vectors. Geodesic is rejected: it is a
/// property of a neighbor graph, not of a vector pair.
pub fn vector_distance(a: &[f32], b: &[f32], spec: MetricSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if let Metric::Geodesic { .. } = spec.metric {
        return Err(Error::GeodesicNotPointwise);
    }
    let (a, b) = if spec.normalized {
        (unit_copy(a, 0)?, unit_copy(b, 1)?)
    } else {
        (
            a.iter().map(|&x| x as f64).collect::<Vec<_>>(),
            b.iter().map(|&x| x as f64).collect::<Vec<_>>(),
        )
    };
    raw_distance(&a, &b, spec.metric)
}

fn prepared_rows(x: &EmbeddingMatrix, normalized: bool) -> Result<Vec<f64>> {
    if normalized {
        Ok(l2_normalize(x)?.to_f64())
    } else {
        Ok(x.to_f64())
    }
}

/// All pairwise dissimilarities under a pointwise metric.
pub fn pairwise_distance_matrix(x: &EmbeddingMatrix, spec: MetricSpec) -> Result<DistanceMatrix> {
    if let Metric::Geodesic { .. } = spec.metric {
        return Err(Error::GeodesicNotPointwise);
    }
    let rows = prepared_rows(x, spec.normalized)?;
    let (n, d) = (x.n(), x.d());
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &rows[i * d..(i + 1) * d];
            (i + 1..n)
                .map(|j| raw_distance(a, &rows[j * d..(j + 1) * d], spec.metric).unwrap_or(0.0))
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix::from_raw(n, values))
}

/// Dissimilarity matrix for any metric, geodesic included.
pub fn distance_matrix(x: &EmbeddingMatrix, spec: MetricSpec) -> Result<DistanceMatrix> {
    match spec.metric {
        Metric::Geodesic { k } => {
            let graph = build_knn_graph(x, k.min(x.n().saturating_sub(1)).max(1), spec.edge_metric(), true)?;
            geodesic_distance_matrix(&graph, x)
        }
        _ => pairwise_distance_matrix(x, spec),
    }
}

/// Brute-force kNN graph. Equal distances are broken toward the lower row
/// index. With `symmetrize` the union graph is returned.
pub fn build_knn_graph(
    x: &EmbeddingMatrix,
    k: usize,
    spec: MetricSpec,
    symmetrize: bool,
) -> Result<KnnGraph> {
    let n = x.n();
    if k == 0 || k + 1 > n {
        return Err(Error::KTooLarge {
            k,
            max: n.saturating_sub(1),
        });
    }
    if let Metric::Geodesic { .. } = spec.metric {
        return Err(Error::GeodesicNotPointwise);
    }
    let rows = prepared_rows(x, spec.normalized)?;
    let d = x.d();
    let adjacency: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &rows[i * d..(i + 1) * d];
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist = raw_distance(a, &rows[j * d..(j + 1) * d], spec.metric).unwrap_or(0.0);
                    (j, dist)
                })
                .collect();
            let by_dist = |p: &(usize, f64), q: &(usize, f64)| p.1.total_cmp(&q.1).then(p.0.cmp(&q.0));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist);
                cand.truncate(k);
            }
            cand.sort_by_key(|e| e.0);
            cand
        })
        .collect();
    let graph = KnnGraph {
        n,
        k,
        adjacency,
        symmetrized: false,
        metric: spec,
    };
    Ok(if symmetrize { graph.symmetrize() } else { graph })
}

/// Joins disconnected components: for every pair of components the single
/// closest pair of points (under the graph's metric) becomes an edge.
pub fn connect_components(graph: &KnnGraph, data: &EmbeddingMatrix) -> Result<KnnGraph> {
    let mut g = graph.symmetrize();
    let (count, comp) = g.components();
    if count <= 1 {
        return Ok(g);
    }
    if data.n() != g.n() {
        return Err(Error::LengthMismatch {
            left: g.n(),
            right: data.n(),
        });
    }
    let spec = g.metric().edge_metric();
    let rows = prepared_rows(data, spec.normalized)?;
    let d = data.d();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, &c) in comp.iter().enumerate() {
        groups[c].push(i);
    }
    let mut bridges = Vec::new();
    for a in 0..count {
        for b in a + 1..count {
            let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
            for &i in &groups[a] {
                for &j in &groups[b] {
                    let dist = raw_distance(&rows[i * d..(i + 1) * d], &rows[j * d..(j + 1) * d], spec.metric)?;
                    if dist < best.2 {
                        best = (i, j, dist);
                    }
                }
            }
            bridges.push(best);
        }
    }
    for (i, j, w) in bridges {
        g.add_undirected_edge(i, j, w);
    }
    Ok(g)
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &KnnGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: du, node: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in graph.neighbors(u) {
            let alt = du + w;
            if alt < dist[v] {
                dist[v] = alt;
                heap.push(HeapEntry { dist: alt, node: v });
            }
        }
    }
    dist
}

/// All-pairs shortest path lengths by per-source Dijkstra, row-major `n x n`.
/// Unreachable pairs are `+inf`.
pub fn shortest_paths(graph: &KnnGraph) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (0..graph.n())
        .into_par_iter()
        .map(|s| dijkstra(graph, s))
        .collect();
    rows.concat()
}

/// All-pairs shortest paths by Floyd-Warshall, `O(n^3)`. Kept as a reference
/// for [`shortest_paths`].
pub fn floyd_warshall(graph: &KnnGraph) -> Vec<f64> {
    let n = graph.n();
    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
        for &(j, w) in graph.neighbors(i) {
            if w < dist[i * n + j] {
                dist[i * n + j] = w;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            let dim = dist[i * n + m];
            if dim.is_infinite() {
                continue;
            }
            for j in 0..n {
                let alt = dim + dist[m * n + j];
                if alt < dist[i * n + j] {
                    dist[i * n + j] = alt;
                }
            }
        }
    }
    dist
}

/// Geodesic distances over a kNN graph. The graph is symmetrized and, if it
/// is disconnected, bridged with [`connect_components`] using `data`.
pub fn geodesic_distance_matrix(graph: &KnnGraph, data: &EmbeddingMatrix) -> Result<DistanceMatrix> {
    let g = connect_components(graph, data)?;
    let n = g.n();
    let mut values = shortest_paths(&g);
    // Path sums accumulate in a different order from each end.
    for i in 0..n {
        values[i * n + i] = 0.0;
        for j in i + 1..n {
            let v = values[i * n + j].min(values[j * n + i]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix::from_raw(n, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        EmbeddingMatrix::new(n, d, v).unwrap()
    }

    const POINTWISE: [Metric; 5] = [
        Metric::Euclidean,
        Metric::Manhattan,
        Metric::Chebyshev,
        Metric::Cosine,
        Metric::Jeffreys,
    ];

    #[test]
    fn identical_vectors_have_zero_distance() {
        let a = [0.3f32, -1.2, 4.0, 0.01];
        for m in POINTWISE {
            for normalized in [false, true] {
                let spec = MetricSpec { metric: m, normalized };
                assert_eq!(vector_distance(&a, &a, spec).unwrap(), 0.0, "{spec}");
            }
        }
    }

    #[test]
    fn unit_vectors_euclidean_squared_matches_cosine() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a: Vec<f32> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f32> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let e = vector_distance(&a, &b, MetricSpec::normalized(Metric::Euclidean)).unwrap();
            let c = vector_distance(&a, &b, MetricSpec::new(Metric::Cosine)).unwrap();
            assert!((e * e - 2.0 * c).abs() < 1e-6);
        }
    }

    #[test]
    fn manhattan_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f32> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f32> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut oracle = 0.0f64;
        for i in 0..5 {
            oracle += (a[i] as f64 - b[i] as f64).abs();
        }
        assert_eq!(vector_distance(&a, &b, MetricSpec::new(Metric::Manhattan)).unwrap(), oracle);
    }

    #[test]
    fn dimension_mismatch_and_geodesic_rejected() {
        assert!(matches!(
            vector_distance(&[1.0], &[1.0, 2.0], MetricSpec::EUCLIDEAN),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            vector_distance(&[1.0], &[2.0], MetricSpec::new(Metric::Geodesic { k: 3 })),
            Err(Error::GeodesicNotPointwise)
        ));
        assert!(jeffreys_divergence(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn jeffreys_hand_value() {
        let j = jeffreys_divergence(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((j - 0.4 * 9f64.ln()).abs() < 1e-9, "{j}");
        assert_eq!(jeffreys_divergence(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
    }

    #[test]
    fn jeffreys_symmetric_on_random_simplex_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let q: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let pq = jeffreys_divergence(&p, &q).unwrap();
            let qp = jeffreys_divergence(&q, &p).unwrap();
            assert!((pq - qp).abs() < 1e-9);
            assert!(pq >= 0.0);
        }
    }

    #[test]
    fn pairwise_single_point() {
        let x = EmbeddingMatrix::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let d = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
        assert_eq!(d.values(), &[0.0]);
    }

    #[test]
    fn pairwise_matches_double_loop() {
        let x = random_matrix(5, 4, 4);
        let d = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let mut s = 0.0f64;
                for c in 0..4 {
                    let t = x.get(i, c) as f64 - x.get(j, c) as f64;
                    s += t * t;
                }
                assert_eq!(d.get(i, j), s.sqrt());
            }
        }
    }

    #[test]
    fn normalized_variant_equals_prenormalized_input() {
        let x = random_matrix(6, 3, 5);
        let xn = l2_normalize(&x).unwrap();
        for m in POINTWISE {
            let a = pairwise_distance_matrix(&x, MetricSpec::normalized(m)).unwrap();
            let b = pairwise_distance_matrix(&xn, MetricSpec::new(m)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn knn_complete_when_k_is_n_minus_one() {
        let x = random_matrix(6, 2, 6);
        let g = build_knn_graph(&x, 5, MetricSpec::EUCLIDEAN, true).unwrap();
        for i in 0..6 {
            assert_eq!(g.degree(i), 5);
        }
        assert!(matches!(
            build_knn_graph(&x, 6, MetricSpec::EUCLIDEAN, false),
            Err(Error::KTooLarge { .. })
        ));
    }

    #[test]
    fn knn_collinear_points_with_ties() {
        let x = EmbeddingMatrix::from_rows(&[[0.0f32], [1.0], [2.0], [10.0]]).unwrap();
        let g = build_knn_graph(&x, 1, MetricSpec::EUCLIDEAN, false).unwrap();
        let out: Vec<usize> = (0..4).map(|i| g.neighbors(i)[0].0).collect();
        assert_eq!(out, vec![1, 0, 1, 2]);
        let s = g.symmetrize();
        assert_eq!(s.edge_count(), 3);
        assert!(s.has_edge(0, 1) && s.has_edge(1, 2) && s.has_edge(2, 3));
        assert_eq!(s.neighbors(3), &[(2, 8.0)]);
    }

    #[test]
    fn knn_matches_sorted_rows_of_distance_matrix() {
        let x = random_matrix(30, 3, 7);
        let dm = pairwise_distance_matrix(&x, MetricSpec::EUCLIDEAN).unwrap();
        let g = build_knn_graph(&x, 4, MetricSpec::EUCLIDEAN, false).unwrap();
        for i in 0..30 {
            let mut order: Vec<usize> = (0..30).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| dm.get(i, a).total_cmp(&dm.get(i, b)).then(a.cmp(&b)));
            let mut expect = order[..4].to_vec();
            expect.sort();
            let got: Vec<usize> = g.neighbors(i).iter().map(|e| e.0).collect();
            assert_eq!(got, expect);
            for &(j, w) in g.neighbors(i) {
                assert_eq!(w, dm.get(i, j));
            }
        }
    }

    #[test]
    fn chain_geodesic() {
        let x = EmbeddingMatrix::from_rows(&[[0.0f32], [1.0], [2.0]]).unwrap();
        let g = KnnGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)], MetricSpec::EUCLIDEAN);
        let d = geodesic_distance_matrix(&g, &x).unwrap();
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(2, 0), 2.0);
    }

    #[test]
    fn disconnected_graph_is_bridged() {
        let x = EmbeddingMatrix::from_rows(&[[0.0f32], [1.0], [10.0], [11.0]]).unwrap();
        let g = build_knn_graph(&x, 1, MetricSpec::EUCLIDEAN, true).unwrap();
        assert_eq!(g.components().0, 2);
        let d = geodesic_distance_matrix(&g, &x).unwrap();
        assert_eq!(d.get(1, 2), 9.0);
        assert_eq!(d.get(0, 3), 11.0);
    }

    #[test]
    fn dijkstra_matches_floyd_warshall() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..50 {
            let n = rng.random_range(5..=40);
            let k = rng.random_range(1..=3.min(n - 1));
            let x = random_matrix(n, 3, 100 + trial);
            let g = build_knn_graph(&x, k, MetricSpec::EUCLIDEAN, true).unwrap();
            let g = connect_components(&g, &x).unwrap();
            let a = shortest_paths(&g);
            let b = floyd_warshall(&g);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-9, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn parse_metric_names() {
        assert_eq!("euclidean".parse::<MetricSpec>().unwrap(), MetricSpec::EUCLIDEAN);
        assert_eq!(
            "normalized-cosine".parse::<MetricSpec>().unwrap(),
            MetricSpec::normalized(Metric::Cosine)
        );
        assert_eq!(
            "geodesic:5".parse::<MetricSpec>().unwrap().metric,
            Metric::Geodesic { k: 5 }
        );
        assert!("nope".parse::<MetricSpec>().is_err());
        let s = MetricSpec::normalized(Metric::Geodesic { k: 10 });
        assert_eq!(s.to_string().parse::<MetricSpec>().unwrap(), s);
    }

    fn vec3() -> impl Strategy<Value = Vec<f32>> {
        prop::collection::vec(-10.0f32..10.0, 3)
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in vec3(), b in vec3(), c in vec3()) {
            for m in [Metric::Euclidean, Metric::Manhattan, Metric::Chebyshev] {
                let s = MetricSpec::new(m);
                let ab = vector_distance(&a, &b, s).unwrap();
                let bc = vector_distance(&b, &c, s).unwrap();
                let ac = vector_distance(&a, &c, s).unwrap();
                prop_assert!(ac <= ab + bc + 1e-9);
            }
        }

        #[test]
        fn symmetric_and_non_negative(a in vec3(), b in vec3()) {
            for m in POINTWISE {
                let s = MetricSpec::new(m);
                let ab = vector_distance(&a, &b, s).unwrap();
                let ba = vector_distance(&b, &a, s).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
            }
        }

        #[test]
        fn positive_scaling(a in vec3(), b in vec3(), c in 0.1f32..10.0) {
            let sa: Vec<f32> = a.iter().map(|v| v * c).collect();
            let sb: Vec<f32> = b.iter().map(|v| v * c).collect();
            for m in [Metric::Euclidean, Metric::Manhattan, Metric::Chebyshev] {
                let s = MetricSpec::new(m);
                let d0 = vector_distance(&a, &b, s).unwrap();
                let d1 = vector_distance(&sa, &sb, s).unwrap();
                prop_assert!((d1 - c as f64 * d0).abs() <= 1e-6 * (1.0 + d1));
            }
            let s = MetricSpec::new(Metric::Cosine);
            let d0 = vector_distance(&a, &b, s).unwrap();
            let d1 = vector_distance(&sa, &sb, s).unwrap();
            prop_assert!((d1 - d0).abs() <= 1e-6);
        }
    }
}
