//! Core-percentile pseudo-labels: the members of each cluster closest to
//! its centroid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Centers, ClusterAssignment, EmbeddingMatrix, LabelVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    /// Retained instances in increasing index order.
    pub kept_indices: Vec<usize>,
    /// Cluster of each retained instance.
    pub pseudo_labels: Vec<usize>,
    pub percentile: f64,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.kept_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept_indices.is_empty()
    }

    /// Fraction of kept instances whose pseudo-label matches the truth under
    /// the best one-to-one cluster-to-class matching.
    pub fn accuracy(&self, truth: &LabelVector) -> Result<f64> {
        let kept_truth: Vec<u32> = self
            .kept_indices
            .iter()
            .map(|&i| {
                truth.as_slice().get(i).copied().ok_or(Error::LengthMismatch {
                    left: i + 1,
                    right: truth.len(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(crate::external::ContingencyTable::from_ids(&self.pseudo_labels, &kept_truth)?.matched_accuracy())
    }
}

/// Number of members kept from a cluster of `size`: `ceil(percentile * size)`,
/// at least one.
pub fn kept_count(size: usize, percentile: f64) -> usize {
    // Guard against products like 0.3 * 10 = 3.0000000000000004.
    let raw = (percentile * size as f64 - 1e-9).ceil() as usize;
    raw.clamp(1, size.max(1))
}

/// Keeps, per cluster, the `ceil(percentile * size)` members nearest the
/// cluster centroid in Euclidean distance, ties to the lower index.
/// Attached centroids are used when present, member means otherwise.
pub fn core_percentile_labels(
    y: &EmbeddingMatrix,
    assignment: &ClusterAssignment,
    percentile: f64,
) -> Result<PseudoLabelSet> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::BadPercentile(percentile));
    }
    if y.n() != assignment.n() {
        return Err(Error::LengthMismatch {
            left: assignment.n(),
            right: y.n(),
        });
    }
    let d = y.d();
    let centroids = match assignment.centers() {
        Centers::Centroids { d: cd, values } if *cd == d => values.clone(),
        _ => assignment.mean_centroids(y)?,
    };
    let mut kept = Vec::with_capacity(y.n());
    for (c, members) in assignment.members().into_iter().enumerate() {
        let mu = &centroids[c * d..(c + 1) * d];
        let mut ranked: Vec<(f64, usize)> = members
            .iter()
            .map(|&i| {
                let sq: f64 = y.row(i).iter().zip(mu).map(|(&v, m)| (v as f64 - m).powi(2)).sum();
                (sq, i)
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let take = kept_count(members.len(), percentile);
        kept.extend(ranked[..take].iter().map(|&(_, i)| (i, c)));
    }
    kept.sort_unstable();
    let (kept_indices, pseudo_labels) = kept.into_iter().unzip();
    Ok(PseudoLabelSet {
        kept_indices,
        pseudo_labels,
        percentile,
    })
}
