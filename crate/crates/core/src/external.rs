//! External evaluation against ground-truth labels: Hungarian-matched
//! accuracy, normalized mutual information and the adjusted Rand index.
//! All three return fractions, not percentages.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, LabelVector};

/// Co-occurrence counts of two labelings, `rows x cols` row-major. Ids are
/// compacted in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
    pub n: u64,
    /// Pairs of instances grouped together by both labelings.
    pub pair_agreements: u64,
    /// Pairs of instances separated by both labelings.
    pub pair_disagreements: u64,
}

fn compact<T: Copy + Eq + Hash>(ids: &[T]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = ids
        .iter()
        .map(|id| {
            let next = map.len();
            *map.entry(*id).or_insert(next)
        })
        .collect();
    (out, map.len())
}

#[inline]
fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

impl ContingencyTable {
    pub fn from_ids<A: Copy + Eq + Hash, B: Copy + Eq + Hash>(left: &[A], right: &[B]) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::LengthMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        let (l, rows) = compact(left);
        let (r, cols) = compact(right);
        let mut counts = vec![0u64; rows * cols];
        for (&i, &j) in l.iter().zip(&r) {
            counts[i * cols + j] += 1;
        }
        let n = left.len() as u64;
        let mut t = ContingencyTable {
            rows,
            cols,
            counts,
            n,
            pair_agreements: 0,
            pair_disagreements: 0,
        };
        let together = t.counts.iter().map(|&c| choose2(c)).sum::<u64>();
        let sum_rows = t.row_sums().into_iter().map(choose2).sum::<u64>();
        let sum_cols = t.col_sums().into_iter().map(choose2).sum::<u64>();
        t.pair_agreements = together;
        t.pair_disagreements = choose2(n) + together - sum_rows - sum_cols;
        Ok(t)
    }

    pub fn new(pred: &ClusterAssignment, truth: &LabelVector) -> Result<Self> {
        Self::from_ids(pred.labels(), truth.as_slice())
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0u64; self.counts.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                counts[j * self.rows + i] = self.get(i, j);
            }
        }
        ContingencyTable {
            rows: self.cols,
            cols: self.rows,
            counts,
            ..*self
        }
    }

    /// Rand index: fraction of instance pairs on which both labelings agree.
    pub fn rand_index(&self) -> f64 {
        let total = choose2(self.n);
        if total == 0 {
            return 1.0;
        }
        (self.pair_agreements + self.pair_disagreements) as f64 / total as f64
    }

    /// Entropies of the row and column labelings and their mutual
    /// information, in units of `ln(base)`.
    pub fn information(&self, base: f64) -> (f64, f64, f64) {
        let n = self.n as f64;
        let scale = base.ln();
        let entropy = |sums: Vec<u64>| -> f64 {
            sums.into_iter()
                .filter(|&c| c > 0)
                .map(|c| {
                    let p = c as f64 / n;
                    -p * p.ln()
                })
                .sum::<f64>()
                / scale
        };
        let rows = self.row_sums();
        let cols = self.col_sums();
        let mut mi = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let c = self.get(i, j);
                if c > 0 {
                    let c = c as f64;
                    mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
                }
            }
        }
        (entropy(rows), entropy(cols), (mi / scale).max(0.0))
    }

    /// `I / sqrt(H_rows H_cols)`. Two single-class labelings score 1; one
    /// single-class labeling against a non-trivial one scores 0.
    pub fn nmi_in_base(&self, base: f64) -> f64 {
        let (hu, hv, mi) = self.information(base);
        if hu == 0.0 && hv == 0.0 {
            return 1.0;
        }
        if hu == 0.0 || hv == 0.0 {
            return 0.0;
        }
        (mi / (hu * hv).sqrt()).min(1.0)
    }

    pub fn nmi(&self) -> f64 {
        self.nmi_in_base(std::f64::consts::E)
    }

    pub fn ari(&self) -> f64 {
        let total = choose2(self.n) as f64;
        let index = self.pair_agreements as f64;
        let sum_rows = self.row_sums().into_iter().map(choose2).sum::<u64>() as f64;
        let sum_cols = self.col_sums().into_iter().map(choose2).sum::<u64>() as f64;
        if total == 0.0 {
            return 1.0;
        }
        let expected = sum_rows * sum_cols / total;
        let max = 0.5 * (sum_rows + sum_cols);
        if max == expected {
            return 1.0;
        }
        (index - expected) / (max - expected)
    }

    /// Best one-to-one matching of rows to columns, as the fraction of
    /// instances on matched cells.
    pub fn matched_accuracy(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        let m = self.rows.max(self.cols);
        let top = self.counts.iter().copied().max().unwrap_or(0) as f64;
        let mut cost = vec![top; m * m];
        for i in 0..self.rows {
            for j in 0..self.cols {
                cost[i * m + j] = top - self.get(i, j) as f64;
            }
        }
        let matching = hungarian(&cost, m);
        let hits: u64 = matching
            .iter()
            .enumerate()
            .filter(|&(i, &j)| i < self.rows && j < self.cols)
            .map(|(i, &j)| self.get(i, j))
            .sum();
        hits as f64 / self.n as f64
    }
}

/// Minimum-cost perfect matching on a square `m x m` cost matrix. Returns
/// the column assigned to each row.
pub fn hungarian(cost: &[f64], m: usize) -> Vec<usize> {
    assert_eq!(cost.len(), m * m, "cost matrix must be square");
    // Shortest augmenting paths with row/column potentials, 1-based with a
    // virtual column 0.
    let mut u = vec![0.0f64; m + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; m];
    for j in 1..=m {
        if row_of[j] > 0 {
            out[row_of[j] - 1] = j - 1;
        }
    }
    out
}

/// Accuracy under the best injective cluster-to-class matching.
pub fn clustering_accuracy(pred: &ClusterAssignment, truth: &LabelVector) -> Result<f64> {
    Ok(ContingencyTable::new(pred, truth)?.matched_accuracy())
}

pub fn nmi(pred: &ClusterAssignment, truth: &LabelVector) -> Result<f64> {
    Ok(ContingencyTable::new(pred, truth)?.nmi())
}

pub fn ari(pred: &ClusterAssignment, truth: &LabelVector) -> Result<f64> {
    Ok(ContingencyTable::new(pred, truth)?.ari())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalScores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

pub fn external_scores(pred: &ClusterAssignment, truth: &LabelVector) -> Result<ExternalScores> {
    let t = ContingencyTable::new(pred, truth)?;
    Ok(ExternalScores {
        acc: t.matched_accuracy(),
        nmi: t.nmi(),
        ari: t.ari(),
    })
}
