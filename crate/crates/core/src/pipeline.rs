//! End-to-end run: read embeddings, L2-normalize, reduce, cluster at a fixed
//! or estimated `k`, then score.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::{Clusterer, EngineConfig, EngineKind};
use crate::distance::{build_knn_graph, distance_matrix, MetricSpec};
use crate::error::{Error, Result, StageExt};
use crate::external::external_scores;
use crate::io::{read_embedding_file, read_label_file, FileFormat};
use crate::model::{ClusterAssignment, EmbeddingMatrix, LabelVector, RngSeed};
use crate::reduce::{l2_normalize, reduce, ReducerConfig, ReducerKind};
use crate::selection::{bayes_estimate, sweep_estimate, BayesOptConfig};
use crate::validity::{avg_clustering_coefficient, calinski_harabasz, davies_bouldin, silhouette_score};

/// Where ground-truth labels come from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LabelSource {
    /// The labels section of an `OWCL` file, or the last CSV column.
    #[default]
    Embedded,
    None,
    /// A text file with one integer label per line.
    File(PathBuf),
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelSource::Embedded => f.write_str("embedded"),
            LabelSource::None => f.write_str("none"),
            LabelSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "embedded" => LabelSource::Embedded,
            "none" => LabelSource::None,
            "" => return Err(Error::InvalidConfig("empty label source".into())),
            path => LabelSource::File(PathBuf::from(path)),
        })
    }
}

impl From<LabelSource> for String {
    fn from(l: LabelSource) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for LabelSource {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Sweep,
    Bayes,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sweep" => Ok(Estimator::Sweep),
            "bayes" => Ok(Estimator::Bayes),
            _ => Err(Error::InvalidConfig(format!("unknown estimator {s:?}"))),
        }
    }
}

/// Either a fixed cluster count or a range to estimate it over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum KSelection {
    Fixed {
        k: usize,
    },
    Estimate {
        estimator: Estimator,
        k_min: usize,
        k_max: usize,
        /// Evaluations for the Bayesian estimator.
        budget: Option<usize>,
        init_points: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub format: FileFormat,
    pub labels: LabelSource,
    pub normalize: bool,
    pub reducer: ReducerConfig,
    pub engine: EngineConfig,
    pub selection: KSelection,
    /// Neighbors per node for the reported average clustering coefficient.
    pub graph_k: usize,
    pub seed: RngSeed,
}

impl PipelineConfig {
    pub fn new(selection: KSelection) -> Self {
        PipelineConfig {
            input: None,
            format: FileFormat::Owcl,
            labels: LabelSource::Embedded,
            normalize: true,
            reducer: ReducerConfig::defaults(ReducerKind::Umap),
            engine: EngineConfig::kmeans(),
            selection,
            graph_k: 10,
            seed: RngSeed(0),
        }
    }

    /// Copies the run seed into the reducer and engine.
    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self.reducer.seed = seed;
        self.engine.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalScores {
    pub silhouette: f64,
    /// `null` in JSON when the within-cluster scatter is zero.
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
    pub avg_clustering_coefficient: f64,
}

/// External scores as percentages with one decimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

pub fn percent(fraction: f64) -> f64 {
    (fraction * 1000.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub chosen_k: usize,
    pub assignment: Vec<usize>,
    pub internal: InternalScores,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub external: Option<ExternalReport>,
    pub trace: Vec<(usize, f64)>,
    pub config_echo: PipelineConfig,
    pub seed: RngSeed,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Reads the configured input and its labels.
pub fn load_input(cfg: &PipelineConfig) -> Result<(EmbeddingMatrix, Option<LabelVector>)> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("no input file given".into()))?;
    load_embeddings(path, cfg.format, &cfg.labels)
}

pub fn load_embeddings(
    path: &Path,
    format: FileFormat,
    labels: &LabelSource,
) -> Result<(EmbeddingMatrix, Option<LabelVector>)> {
    let embedded = matches!(labels, LabelSource::Embedded);
    let (x, own) = read_embedding_file(path, format, embedded)?;
    let labels = match labels {
        LabelSource::Embedded => own,
        LabelSource::None => None,
        LabelSource::File(p) => Some(read_label_file(p)?),
    };
    if let Some(l) = &labels {
        l.check_len(x.n())?;
    }
    Ok((x, labels))
}

/// Normalization and reduction.
pub fn prepare(x: &EmbeddingMatrix, cfg: &PipelineConfig) -> Result<EmbeddingMatrix> {
    let x = if cfg.normalize {
        l2_normalize(x).stage("normalize")?
    } else {
        x.clone()
    };
    reduce(&x, &cfg.reducer).stage("reduce")
}

/// Clusters the prepared data, returning the assignment and the `(k,
/// silhouette)` trace of any estimation.
pub fn cluster_prepared(y: &EmbeddingMatrix, cfg: &PipelineConfig) -> Result<(ClusterAssignment, Vec<(usize, f64)>)> {
    match &cfg.selection {
        KSelection::Fixed { k } => {
            let a = Clusterer::new(y, cfg.engine.clone())
                .and_then(|c| c.fit(*k))
                .stage("cluster")?;
            Ok((a, Vec::new()))
        }
        KSelection::Estimate {
            estimator,
            k_min,
            k_max,
            budget,
            init_points,
        } => {
            let result = match estimator {
                Estimator::Sweep => sweep_estimate(y, *k_min, *k_max, &cfg.engine),
                Estimator::Bayes => {
                    let bayes = BayesOptConfig {
                        k_min: *k_min,
                        k_max: *k_max,
                        budget: budget.ok_or_else(|| {
                            Error::InvalidConfig("the bayes estimator needs a budget".into()).in_stage("estimate")
                        })?,
                        init_points: *init_points,
                        seed: cfg.seed,
                    };
                    bayes_estimate(y, &bayes, &cfg.engine)
                }
            }
            .stage("estimate")?;
            Ok((result.best_labels, result.trace))
        }
    }
}

/// Internal indices on the clustered data. The silhouette uses the engine's
/// metric for the medoid engines and Euclidean distance for k-means.
pub fn internal_scores(y: &EmbeddingMatrix, a: &ClusterAssignment, cfg: &PipelineConfig) -> Result<InternalScores> {
    let metric = match cfg.engine.kind {
        EngineKind::KMeans => MetricSpec::EUCLIDEAN,
        _ => cfg.engine.metric,
    };
    let d = distance_matrix(y, metric)?;
    let graph_k = cfg.graph_k.min(y.n().saturating_sub(1)).max(1);
    let graph = build_knn_graph(y, graph_k, MetricSpec::EUCLIDEAN, true)?;
    Ok(InternalScores {
        silhouette: silhouette_score(&d, a)?,
        calinski_harabasz: calinski_harabasz(y, a)?,
        davies_bouldin: davies_bouldin(y, a)?,
        avg_clustering_coefficient: avg_clustering_coefficient(&graph),
    })
}

/// Runs every stage on in-memory data.
pub fn run_on_data(x: &EmbeddingMatrix, labels: Option<&LabelVector>, cfg: &PipelineConfig) -> Result<RunReport> {
    let y = prepare(x, cfg)?;
    let (assignment, trace) = cluster_prepared(&y, cfg)?;
    let internal = internal_scores(&y, &assignment, cfg).stage("internal")?;
    let external = labels
        .map(|truth| {
            external_scores(&assignment, truth).map(|s| ExternalReport {
                acc: percent(s.acc),
                nmi: percent(s.nmi),
                ari: percent(s.ari),
            })
        })
        .transpose()
        .stage("external")?;
    Ok(RunReport {
        chosen_k: assignment.k(),
        assignment: assignment.labels().to_vec(),
        internal,
        external,
        trace,
        config_echo: cfg.clone(),
        seed: cfg.seed,
    })
}

/// Reads the configured input and runs every stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    let (x, labels) = load_input(cfg).stage("input")?;
    run_on_data(&x, labels.as_ref(), cfg)
}
