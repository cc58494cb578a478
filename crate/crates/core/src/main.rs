use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use owcluster::cluster::{EngineKind, RestartSelection};
use owcluster::distance::MetricSpec;
use owcluster::error::{Error, Result};
use owcluster::external::external_scores;
use owcluster::io::{read_label_file, write_csv, write_owcl, FileFormat};
use owcluster::model::{ClusterAssignment, RngSeed};
use owcluster::pipeline::{
    cluster_prepared, load_embeddings, load_input, percent, prepare, run_pipeline, Estimator, KSelection,
    LabelSource, PipelineConfig,
};
use owcluster::pseudo::core_percentile_labels;
use owcluster::reduce::{ReducerConfig, ReducerKind};

#[derive(Parser)]
#[command(name = "owcluster", version, about = "Cluster embedding vectors without labels or a known class count")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize and reduce embeddings, writing the result to --out.
    Reduce(RunArgs),
    /// Cluster at a fixed --k and report.
    Cluster(RunArgs),
    /// Estimate k over [--k-min, --k-max] and report.
    EstimateK(RunArgs),
    /// Score an assignment file against ground-truth labels.
    Evaluate(EvalArgs),
    /// Cluster, then keep the core fraction of each cluster as pseudo-labels.
    PseudoLabel(RunArgs),
    /// Full run: fixed --k, or estimation when a range is given.
    Pipeline(RunArgs),
}

#[derive(Args, Clone)]
struct Shared {
    /// Embedding file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<FileFormat>,
    /// `embedded`, `none`, or a file with one label per line.
    #[arg(long)]
    labels: Option<LabelSource>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    shared: Shared,
    /// JSON run configuration; other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// none, pca, mds, isomap, tsne or umap.
    #[arg(long)]
    reducer: Option<ReducerKind>,
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    n_neighbors: Option<usize>,
    #[arg(long)]
    min_dist: Option<f64>,
    /// Reducer iterations (t-SNE steps, UMAP epochs).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Skip L2 normalization before reduction.
    #[arg(long)]
    no_normalize: bool,
    /// Distance for the medoid engines, e.g. `euclidean`, `normalized-cosine`, `geodesic:10`.
    #[arg(long)]
    metric: Option<MetricSpec>,
    #[arg(long)]
    engine: Option<EngineKind>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Rank medoid restarts by the full silhouette instead of the medoid silhouette.
    #[arg(long)]
    full_silhouette_restarts: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// sweep or bayes.
    #[arg(long)]
    estimator: Option<Estimator>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    init_points: Option<usize>,
    /// Fraction of each cluster kept by pseudo-label.
    #[arg(long, default_value_t = 0.5)]
    percentile: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    shared: Shared,
    /// Predicted cluster ids, one per line.
    #[arg(long)]
    assignment: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Only normalization and reduction run.
    ReduceOnly,
    Fixed,
    Estimate,
    /// Fixed with --k, estimation with a range.
    Either,
}

impl RunArgs {
    fn resolve(&self, mode: Mode) -> Result<PipelineConfig> {
        let base = match &self.config {
            Some(path) => serde_json::from_str::<PipelineConfig>(&fs::read_to_string(path)?)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?,
            None => PipelineConfig::new(KSelection::Fixed { k: 2 }),
        };
        let mut cfg = base;
        let s = &self.shared;
        if let Some(input) = &s.input {
            cfg.input = Some(input.clone());
            cfg.format = s.format.unwrap_or_else(|| FileFormat::from_path(input));
        } else if let Some(f) = s.format {
            cfg.format = f;
        }
        if let Some(l) = &s.labels {
            cfg.labels = l.clone();
        }
        if self.no_normalize {
            cfg.normalize = false;
        }
        if let Some(kind) = self.reducer {
            if kind != cfg.reducer.method {
                cfg.reducer = ReducerConfig::defaults(kind);
            }
        }
        let r = &mut cfg.reducer;
        r.target_dims = self.dims.unwrap_or(r.target_dims);
        r.perplexity = self.perplexity.unwrap_or(r.perplexity);
        r.n_neighbors = self.n_neighbors.unwrap_or(r.n_neighbors);
        r.min_dist = self.min_dist.unwrap_or(r.min_dist);
        r.max_iter = self.max_iter.unwrap_or(r.max_iter);
        let e = &mut cfg.engine;
        e.kind = self.engine.unwrap_or(e.kind);
        e.metric = self.metric.unwrap_or(e.metric);
        e.n_init = self.n_init.unwrap_or(e.n_init);
        e.restarts = self.restarts.unwrap_or(e.restarts);
        if self.full_silhouette_restarts {
            e.selection = RestartSelection::FullSilhouette;
        }

        let range = self.k_min.is_some() || self.k_max.is_some() || self.estimator.is_some();
        let wants_range = mode == Mode::Estimate;
        if mode == Mode::ReduceOnly {
            // Selection is unused when only reducing.
        } else if mode == Mode::Fixed && self.k.is_none() && self.config.is_none() {
            return Err(Error::InvalidConfig("cluster needs --k".into()));
        } else if let Some(k) = self.k {
            if wants_range {
                return Err(Error::InvalidConfig("estimate-k takes --k-min/--k-max, not --k".into()));
            }
            cfg.selection = KSelection::Fixed { k };
        } else if range || wants_range {
            let (mut k_min, mut k_max, mut est, mut budget, mut init) = match &cfg.selection {
                KSelection::Estimate {
                    estimator,
                    k_min,
                    k_max,
                    budget,
                    init_points,
                } => (Some(*k_min), Some(*k_max), *estimator, *budget, *init_points),
                KSelection::Fixed { .. } => (None, None, Estimator::Sweep, None, 3),
            };
            k_min = self.k_min.or(k_min);
            k_max = self.k_max.or(k_max);
            est = self.estimator.unwrap_or(est);
            budget = self.budget.or(budget);
            init = self.init_points.unwrap_or(init);
            let (Some(k_min), Some(k_max)) = (k_min, k_max) else {
                return Err(Error::InvalidConfig("estimation needs --k-min and --k-max".into()));
            };
            cfg.selection = KSelection::Estimate {
                estimator: est,
                k_min,
                k_max,
                budget,
                init_points: init,
            };
        } else if self.config.is_none() {
            return Err(Error::InvalidConfig("give --k or an estimation range".into()));
        }
        let seed = s.seed.map(RngSeed).unwrap_or(cfg.seed);
        Ok(cfg.with_seed(seed))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output") + "\n"
}

#[derive(Serialize)]
struct ReduceSummary {
    n: usize,
    dims: usize,
    out: PathBuf,
    config_echo: PipelineConfig,
}

#[derive(Serialize)]
struct EvalReport {
    n: usize,
    acc: f64,
    nmi: f64,
    ari: f64,
}

#[derive(Serialize)]
struct PseudoReport {
    chosen_k: usize,
    percentile: f64,
    kept_indices: Vec<usize>,
    pseudo_labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    config_echo: PipelineConfig,
    seed: RngSeed,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Reduce(args) => {
            let cfg = args.resolve(Mode::ReduceOnly)?;
            let out = args
                .shared
                .out
                .clone()
                .ok_or_else(|| Error::InvalidConfig("reduce needs --out".into()))?;
            let (x, labels) = load_input(&cfg).map_err(|e| e.in_stage("input"))?;
            let y = prepare(&x, &cfg)?;
            match FileFormat::from_path(&out) {
                FileFormat::Csv => write_csv(&out, &y, labels.as_ref()),
                FileFormat::Owcl => write_owcl(&out, &y, labels.as_ref()),
            }
            .map_err(|e| e.in_stage("output"))?;
            let summary = ReduceSummary {
                n: y.n(),
                dims: y.d(),
                out,
                config_echo: cfg,
            };
            print!("{}", to_json(&summary));
            Ok(())
        }
        Command::Cluster(args) => {
            let cfg = args.resolve(Mode::Fixed)?;
            emit(args.shared.out.as_deref(), &run_pipeline(&cfg)?.to_json())
        }
        Command::EstimateK(args) => {
            let cfg = args.resolve(Mode::Estimate)?;
            emit(args.shared.out.as_deref(), &run_pipeline(&cfg)?.to_json())
        }
        Command::Pipeline(args) => {
            let cfg = args.resolve(Mode::Either)?;
            emit(args.shared.out.as_deref(), &run_pipeline(&cfg)?.to_json())
        }
        Command::PseudoLabel(args) => {
            let cfg = args.resolve(Mode::Either)?;
            let (x, labels) = load_input(&cfg).map_err(|e| e.in_stage("input"))?;
            let y = prepare(&x, &cfg)?;
            let (assignment, _) = cluster_prepared(&y, &cfg)?;
            let set = core_percentile_labels(&y, &assignment, args.percentile).map_err(|e| e.in_stage("pseudo-label"))?;
            let accuracy = labels
                .as_ref()
                .map(|t| set.accuracy(t).map(percent))
                .transpose()
                .map_err(|e| e.in_stage("external"))?;
            let report = PseudoReport {
                chosen_k: assignment.k(),
                percentile: set.percentile,
                kept_indices: set.kept_indices,
                pseudo_labels: set.pseudo_labels,
                accuracy,
                seed: cfg.seed,
                config_echo: cfg,
            };
            emit(args.shared.out.as_deref(), &to_json(&report))
        }
        Command::Evaluate(args) => {
            let predicted = read_label_file(&args.assignment).map_err(|e| e.in_stage("input"))?;
            let truth = match (&args.shared.input, &args.shared.labels) {
                (_, Some(LabelSource::File(p))) => read_label_file(p),
                (Some(input), source) => {
                    let format = args.shared.format.unwrap_or_else(|| FileFormat::from_path(input));
                    load_embeddings(input, format, source.as_ref().unwrap_or(&LabelSource::Embedded))
                        .and_then(|(_, l)| l.ok_or_else(|| Error::InvalidConfig("input has no labels".into())))
                }
                _ => Err(Error::InvalidConfig("evaluate needs --labels PATH or a labeled --input".into())),
            }
            .map_err(|e| e.in_stage("input"))?;
            let ids: Vec<u32> = predicted.0;
            let pred = ClusterAssignment::from_ids(&ids).map_err(|e| e.in_stage("evaluate"))?;
            let s = external_scores(&pred, &truth).map_err(|e| e.in_stage("evaluate"))?;
            let report = EvalReport {
                n: pred.n(),
                acc: percent(s.acc),
                nmi: percent(s.nmi),
                ari: percent(s.ari),
            };
            emit(args.shared.out.as_deref(), &to_json(&report))
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("OWCLUSTER_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("OWCLUSTER_THREADS={raw:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
