//! Shared data types: embedding matrices, labels, cluster assignments,
//! distance matrices, neighbor graphs and seeds.
//!
//! Instance identity is row order everywhere. Values are stored as `f32`;
//! every aggregation in the crate accumulates in `f64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::MetricSpec;
use crate::error::{Error, Result};

/// Dense row-major `n x d` matrix of instance feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::ShapeMismatch {
                expected: n * d,
                actual: values.len(),
            });
        }
        let m = EmbeddingMatrix { n, d, values };
        m.validate()?;
        Ok(m)
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, d, values)
    }

    /// Builds a matrix from `f64` values, rounding to `f32`.
    pub fn from_f64(n: usize, d: usize, values: &[f64]) -> Result<Self> {
        Self::new(n, d, values.iter().map(|&v| v as f32).collect())
    }

    /// Checks the matrix invariants: non-empty and all values finite.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::EmptyMatrix);
        }
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: pos / self.d,
                col: pos % self.d,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.d + j]
    }

    /// Row-major copy widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    /// Column means accumulated in `f64`.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0f64; self.d];
        for row in self.rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v as f64;
            }
        }
        let n = self.n as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Horizontally concatenates two matrices with the same row count.
    pub fn hstack(&self, other: &EmbeddingMatrix) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let d = self.d + other.d;
        let mut values = Vec::with_capacity(self.n * d);
        for i in 0..self.n {
            values.extend_from_slice(self.row(i));
            values.extend_from_slice(other.row(i));
        }
        Self::new(self.n, d, values)
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(self.n, self.d, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Ground-truth class ids, one per instance. Ids need not be contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(pub Vec<u32>);

impl LabelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: self.0.len(),
            });
        }
        Ok(())
    }
}

impl From<Vec<u32>> for LabelVector {
    fn from(v: Vec<u32>) -> Self {
        LabelVector(v)
    }
}

/// Cluster representatives attached to an assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum Centers {
    None,
    /// `k x d` row-major centroid coordinates.
    Centroids { d: usize, values: Vec<f64> },
    /// Row index of each cluster's medoid.
    Medoids(Vec<usize>),
}

/// Per-instance cluster index in `[0, k)` with every cluster non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    sizes: Vec<usize>,
    centers: Centers,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidAssignment("no instances".into()));
        }
        let mut sizes = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::InvalidAssignment(format!(
                    "instance {i} has cluster {l}, but k = {k}"
                )));
            }
            sizes[l] += 1;
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidAssignment(format!("cluster {j} is empty")));
        }
        Ok(ClusterAssignment {
            labels,
            k,
            sizes,
            centers: Centers::None,
        })
    }

    /// Compacts arbitrary ids into `[0, k)` in order of first appearance.
    pub fn from_ids<T: Copy + Eq + std::hash::Hash>(ids: &[T]) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        let labels = ids
            .iter()
            .map(|id| {
                let next = map.len();
                *map.entry(*id).or_insert(next)
            })
            .collect();
        let k = map.len();
        Self::new(labels, k)
    }

    pub fn with_centroids(mut self, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.k * d {
            return Err(Error::ShapeMismatch {
                expected: self.k * d,
                actual: values.len(),
            });
        }
        self.centers = Centers::Centroids { d, values };
        Ok(self)
    }

    pub fn with_medoids(mut self, medoids: Vec<usize>) -> Result<Self> {
        if medoids.len() != self.k {
            return Err(Error::ShapeMismatch {
                expected: self.k,
                actual: medoids.len(),
            });
        }
        self.centers = Centers::Medoids(medoids);
        Ok(self)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn centers(&self) -> &Centers {
        &self.centers
    }

    pub fn medoids(&self) -> Option<&[usize]> {
        match &self.centers {
            Centers::Medoids(m) => Some(m),
            _ => None,
        }
    }

    /// Arithmetic mean of each cluster's rows of `x`, `k x d` row-major.
    pub fn mean_centroids(&self, x: &EmbeddingMatrix) -> Result<Vec<f64>> {
        if x.n() != self.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: x.n(),
            });
        }
        let d = x.d();
        let mut c = vec![0.0f64; self.k * d];
        for (row, &l) in x.rows().zip(&self.labels) {
            for (acc, &v) in c[l * d..(l + 1) * d].iter_mut().zip(row) {
                *acc += v as f64;
            }
        }
        for (j, &s) in self.sizes.iter().enumerate() {
            c[j * d..(j + 1) * d].iter_mut().for_each(|v| *v /= s as f64);
        }
        Ok(c)
    }

    /// Members of each cluster in increasing instance order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &l) in self.labels.iter().enumerate() {
            m[l].push(i);
        }
        m
    }
}

/// Symmetric `n x n` matrix of non-negative dissimilarities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidDistanceMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "entry ({i}, {j}) = {v}"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, values })
    }

    /// Fills the upper triangle from `f(i, j)` for `i < j` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        DistanceMatrix { n, values }
    }

    pub(crate) fn from_raw(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        DistanceMatrix { n, values }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        DistanceMatrix {
            n: self.n,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Weighted k-nearest-neighbor graph. Edge weights are metric distances.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub(crate) n: usize,
    pub(crate) k: usize,
    /// Neighbor lists sorted by neighbor index.
    pub(crate) adjacency: Vec<Vec<(usize, f64)>>,
    pub(crate) symmetrized: bool,
    pub(crate) metric: MetricSpec,
}

impl KnnGraph {
    /// Undirected graph from an explicit edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], metric: MetricSpec) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a == b {
                continue;
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|e| e.0);
            list.dedup_by_key(|e| e.0);
        }
        let k = adjacency.iter().map(Vec::len).min().unwrap_or(0);
        KnnGraph {
            n,
            k,
            adjacency,
            symmetrized: true,
            metric,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn metric(&self) -> MetricSpec {
        self.metric
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by_key(&b, |e| e.0).is_ok()
    }

    /// Number of undirected edges (counts each direction once when symmetrized).
    pub fn edge_count(&self) -> usize {
        let total: usize = self.adjacency.iter().map(Vec::len).sum();
        if self.symmetrized {
            total / 2
        } else {
            total
        }
    }

    /// Union graph: `i ~ j` if either direction is present.
    pub fn symmetrize(&self) -> KnnGraph {
        if self.symmetrized {
            return self.clone();
        }
        let mut adjacency = self.adjacency.clone();
        for (i, list) in self.adjacency.iter().enumerate() {
            for &(j, w) in list {
                adjacency[j].push((i, w));
            }
        }
        for list in &mut adjacency {
            list.sort_by(|a, b| a.0.cmp(&b.0));
            list.dedup_by_key(|e| e.0);
        }
        KnnGraph {
            n: self.n,
            k: self.k,
            adjacency,
            symmetrized: true,
            metric: self.metric,
        }
    }

    /// Connected components as a per-node component id, numbered by lowest member.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut comp = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    pub(crate) fn add_undirected_edge(&mut self, a: usize, b: usize, w: f64) {
        for (x, y) in [(a, b), (b, a)] {
            let list = &mut self.adjacency[x];
            if let Err(pos) = list.binary_search_by_key(&y, |e| e.0) {
                list.insert(pos, (y, w));
            }
        }
    }
}

/// Seed for every stochastic operation. Same seed and inputs give
/// bit-identical outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for sub-task `tag` (splitmix64 finalizer).
    pub fn derive(self, tag: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

impl From<u64> for RngSeed {
    fn from(s: u64) -> Self {
        RngSeed(s)
    }
}
