//! Clustering engines: k-means on coordinates, FasterPAM and FasterMSC on
//! distance matrices.

mod kmeans;
mod medoids;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distance::{distance_matrix, MetricSpec};
use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, DistanceMatrix, EmbeddingMatrix, RngSeed};

pub use kmeans::{kmeans, kmeans_with_trace, KMeansConfig, KMeansOutput};
pub use medoids::{
    fastermsc, fastermsc_with_trace, fasterpam, fasterpam_with_trace, medoid_silhouette, medoid_total_deviation,
    MedoidConfig, MedoidOutput, RestartSelection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    KMeans,
    FasterPam,
    FasterMsc,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::KMeans => "kmeans",
            EngineKind::FasterPam => "fasterpam",
            EngineKind::FasterMsc => "fastermsc",
        })
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "kmeans" => EngineKind::KMeans,
            "fasterpam" => EngineKind::FasterPam,
            "fastermsc" => EngineKind::FasterMsc,
            _ => return Err(Error::InvalidConfig(format!("unknown engine {s:?}"))),
        })
    }
}

/// Engine settings shared by every `k`. The metric only applies to the
/// medoid engines; k-means is always Euclidean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub metric: MetricSpec,
    /// k-means restarts.
    pub n_init: usize,
    /// Medoid engine restarts.
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub selection: RestartSelection,
    pub seed: RngSeed,
}

impl EngineConfig {
    pub fn new(kind: EngineKind) -> Self {
        EngineConfig {
            kind,
            metric: MetricSpec::EUCLIDEAN,
            n_init: 50,
            restarts: 10,
            max_iter: 10_000,
            tol: 1e-6,
            selection: RestartSelection::MedoidSilhouette,
            seed: RngSeed(0),
        }
    }

    pub fn kmeans() -> Self {
        Self::new(EngineKind::KMeans)
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init;
        self
    }

    pub fn with_metric(mut self, metric: MetricSpec) -> Self {
        self.metric = metric;
        self
    }

    pub fn kmeans_config(&self, k: usize) -> KMeansConfig {
        KMeansConfig {
            k,
            n_init: self.n_init,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
        }
    }

    pub fn medoid_config(&self, k: usize) -> MedoidConfig {
        MedoidConfig {
            k,
            restarts: self.restarts,
            max_iter: self.max_iter,
            seed: self.seed,
            selection: self.selection,
        }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::kmeans()
    }
}

/// Runs one engine at many `k` over the same data, computing the distance
/// matrix for the medoid engines once.
pub struct Clusterer<'a> {
    data: &'a EmbeddingMatrix,
    config: EngineConfig,
    distances: Option<DistanceMatrix>,
}

impl<'a> Clusterer<'a> {
    pub fn new(data: &'a EmbeddingMatrix, config: EngineConfig) -> Result<Self> {
        let distances = match config.kind {
            EngineKind::KMeans => None,
            _ => Some(distance_matrix(data, config.metric)?),
        };
        Ok(Clusterer {
            data,
            config,
            distances,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn fit(&self, k: usize) -> Result<ClusterAssignment> {
        match (self.config.kind, &self.distances) {
            (EngineKind::KMeans, _) => kmeans(self.data, &self.config.kmeans_config(k)),
            (EngineKind::FasterPam, Some(d)) => fasterpam(d, &self.config.medoid_config(k)),
            (EngineKind::FasterMsc, Some(d)) => fastermsc(d, &self.config.medoid_config(k)),
            _ => unreachable!("medoid engines always hold a distance matrix"),
        }
    }
}

/// Clusters `data` into `k` groups with the configured engine.
pub fn cluster(data: &EmbeddingMatrix, k: usize, config: &EngineConfig) -> Result<ClusterAssignment> {
    Clusterer::new(data, config.clone())?.fit(k)
}
