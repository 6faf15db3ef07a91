//! End-to-end experiment runs with a reproducibility manifest.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rmdgraph_core::data::{gen_gaussian_mixture, gen_two_moons_gaussian};
use rmdgraph_core::evaluate::{clustering_error, draw_label_set, ssl_error, subsample_per_class, summarize_trials, trial_seed, EvalReport, TrialsReport};
use rmdgraph_core::graph::{mean_knn_distance, BuiltGraph, GraphSpec, WeightScheme};
use rmdgraph_core::seed::derive_seed;
use rmdgraph_core::select::{delta_sweep, detect_flat_spots, optimize_baseline, optimize_lambda, BaselineMethod, DeltaCurve, LambdaSearch, SelectionResult, DEFAULT_LAMBDA_GRID};
use rmdgraph_core::spectral::spectral_cluster;
use rmdgraph_core::ssl::{grf_propagate, GrfResult, LabelSet};
use rmdgraph_core::{Dataset, Partition};

use crate::config::{Algorithm, DataSource, DeltaSweepConfig, ExperimentConfig, Selection};
use crate::error::{Error, Result};
use crate::io;
use crate::sweep::sweep_cutline;

/// Output of the learning stage.
#[derive(Debug, Clone)]
pub enum Learned {
    Clusters(Partition),
    Propagated { labels: LabelSet, result: GrfResult },
}

impl Learned {
    pub fn prediction(&self) -> &Partition {
        match self {
            Self::Clusters(p) => p,
            Self::Propagated { result, .. } => &result.prediction,
        }
    }
}

/// Error rate of a run against the ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub error_rate: f64,
    /// `all` for clustering, `unlabeled` for label propagation.
    pub scored_points: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching: Option<EvalReport>,
}

/// A validated config with any input file already loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    base: Option<Dataset>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let base = match &config.data {
            DataSource::File { path, .. } => Some(io::read_dataset(path)?),
            _ => None,
        };
        if let (Some(data), Some(c)) = (&base, &config.cutline) {
            if c.axis >= data.dim() {
                return Err(Error::Config("cutline.axis is out of range".into()));
            }
        }
        Ok(Self { config, base })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// The dataset of the run seeded with `seed`.
    pub fn dataset(&self, seed: u64) -> Result<Dataset> {
        let data_seed = derive_seed(seed, "data", 0);
        Ok(match &self.config.data {
            DataSource::Mixture { spec, n } => gen_gaussian_mixture(spec, *n, data_seed)?,
            DataSource::TwoMoons { n, fractions, noise } => gen_two_moons_gaussian(*n, *fractions, *noise, data_seed)?,
            DataSource::File { per_class, .. } => {
                let base = self.base.as_ref().expect("file data is loaded up front");
                match per_class {
                    Some(counts) => subsample_per_class(base, counts, data_seed)?,
                    None => base.clone(),
                }
            }
        })
    }

    fn normalized(&self) -> bool {
        matches!(self.config.algorithm, Algorithm::Sc { normalized: true, .. })
    }

    fn lambda_search(&self, grid: &[f64]) -> Option<LambdaSearch> {
        let GraphSpec::Rmd {
            k,
            resamples,
            weight,
            ..
        } = self.config.graph
        else {
            return None;
        };
        Some(LambdaSearch {
            k,
            variant: self.config.graph.rank_variant()?,
            resamples,
            weight,
            lambda_grid: grid.to_vec(),
            clusters: self.config.clusters()?,
            normalized: self.normalized(),
        })
    }

    pub fn select(&self, data: &Dataset, seed: u64) -> Result<Option<SelectionResult>> {
        let Some(sel) = &self.config.selection else {
            return Ok(None);
        };
        let clusters = self.config.clusters().expect("validated: selection needs sc");
        Ok(Some(match sel {
            Selection::Lambda { delta, lambda_grid } => {
                let search = self.lambda_search(lambda_grid).expect("validated: rmd graph");
                optimize_lambda(data, &search, *delta, seed)?
            }
            Selection::Baseline { delta, .. } => {
                let search = sel
                    .baseline_search(clusters, self.normalized())
                    .expect("baseline mode");
                optimize_baseline(data, &search, *delta, seed)?
            }
        }))
    }

    /// The graph recipe after applying a selection result.
    pub fn graph_spec(&self, data: &Dataset, selection: Option<&SelectionResult>) -> Result<GraphSpec> {
        let (Some(sel), Some(mode)) = (selection, &self.config.selection) else {
            return Ok(self.config.graph.clone());
        };
        let chosen = &sel.chosen;
        Ok(match mode {
            Selection::Lambda { .. } => match self.config.graph.clone() {
                GraphSpec::Rmd {
                    k,
                    variant,
                    resamples,
                    weight,
                    ..
                } => GraphSpec::Rmd {
                    k,
                    lambda: chosen.lambda.expect("lambda trace entry"),
                    variant,
                    resamples,
                    weight,
                },
                other => other,
            },
            Selection::Baseline { method, .. } => {
                let sigma = chosen.sigma.expect("baseline trace entry");
                let weight = WeightScheme::Rbf { sigma };
                match method {
                    BaselineMethod::Knn => GraphSpec::Knn { k: chosen.k, weight },
                    BaselineMethod::FullRbf => GraphSpec::FullRbf { sigma },
                    BaselineMethod::Epsilon => GraphSpec::Epsilon {
                        eps: mean_knn_distance(data, chosen.k)?,
                        weight,
                    },
                }
            }
        })
    }

    pub fn build_graph(&self, data: &Dataset, spec: &GraphSpec, seed: u64) -> Result<BuiltGraph> {
        Ok(spec.build(data, derive_seed(seed, "rank", 0))?)
    }

    pub fn learn(
        &self,
        data: &Dataset,
        built: &BuiltGraph,
        selection: Option<&SelectionResult>,
        seed: u64,
    ) -> Result<Learned> {
        Ok(match self.config.algorithm {
            Algorithm::Sc { clusters, normalized } => Learned::Clusters(match selection {
                // Candidates were clustered on this exact graph.
                Some(sel) => sel.partition.clone(),
                None => spectral_cluster(&built.graph, clusters, normalized, derive_seed(seed, "spectral", 0))?,
            }),
            Algorithm::Grf { labeled } => {
                let truth = data.labels().ok_or_else(|| {
                    rmdgraph_core::Error::InvalidLabels("label propagation draws labels from the data".into())
                })?;
                let labels = draw_label_set(truth, labeled, seed)?;
                let result = grf_propagate(&built.graph, &labels)?;
                Learned::Propagated { labels, result }
            }
        })
    }

    /// Error against the data labels, or `None` for unlabeled data.
    pub fn evaluate(&self, data: &Dataset, learned: &Learned) -> Result<Option<EvalSummary>> {
        let Some(truth) = data.labels() else {
            return Ok(None);
        };
        let matching = clustering_error(learned.prediction(), truth).ok();
        Ok(Some(match learned {
            Learned::Clusters(p) => EvalSummary {
                error_rate: clustering_error(p, truth)?.error_rate,
                scored_points: "all".into(),
                matching,
            },
            Learned::Propagated { labels, result } => EvalSummary {
                error_rate: ssl_error(&result.prediction, truth, labels)?,
                scored_points: "unlabeled".into(),
                matching,
            },
        }))
    }

    /// Data, selection, graph, learner and error for one seed, without files.
    pub fn trial_error(&self, seed: u64) -> Result<f64> {
        let data = self.dataset(seed)?;
        let selection = self.select(&data, seed)?;
        let spec = self.graph_spec(&data, selection.as_ref())?;
        let built = self.build_graph(&data, &spec, seed)?;
        let learned = self.learn(&data, &built, selection.as_ref(), seed)?;
        self.evaluate(&data, &learned)?
            .map(|e| e.error_rate)
            .ok_or_else(|| rmdgraph_core::Error::InvalidLabels("trials need labeled data".into()).into())
    }

    /// `count` trials seeded from `base_seed`, run in parallel and aggregated
    /// in trial order.
    pub fn trials(&self, count: usize, base_seed: u64) -> Result<TrialsReport> {
        if count == 0 {
            return Err(Error::Config("trial count must be positive".into()));
        }
        let outcomes: Vec<(u64, rmdgraph_core::Result<f64>)> = (0..count)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(base_seed, t);
                let r = self.trial_error(seed).map_err(|e| match e {
                    Error::Core(c) => c,
                    other => rmdgraph_core::Error::InvalidParameter(other.to_string()),
                });
                (seed, r)
            })
            .collect();
        Ok(summarize_trials(outcomes)?)
    }

    pub fn delta_curve(&self, data: &Dataset, sweep: &DeltaSweepConfig, seed: u64) -> Result<DeltaCurve> {
        let grid = match &self.config.selection {
            Some(Selection::Lambda { lambda_grid, .. }) => lambda_grid.clone(),
            _ => DEFAULT_LAMBDA_GRID.to_vec(),
        };
        let search = self.lambda_search(&grid).expect("validated: rmd graph with clusters");
        let mut curve = delta_sweep(data, &search, &sweep.deltas, derive_seed(seed, "delta-sweep", 0))?;
        curve.flat_spots = detect_flat_spots(&curve, sweep.rel_tol, sweep.pos_fraction * curve.position_scale);
        Ok(curve)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: String,
    pub file: String,
    pub sha256: String,
}

/// Everything needed to rerun a pipeline and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<Artifact>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// SHA-256 of the compact JSON form of the config, ignoring the output
/// directory.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(&portable(config)).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn portable(config: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        output_dir: None,
        ..config.clone()
    }
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

struct Recorder {
    dir: PathBuf,
    stage: &'static str,
    files: Vec<(&'static str, String)>,
}

impl Recorder {
    fn enter(&mut self, stage: &'static str) {
        self.stage = stage;
    }

    /// Path of an output file, recorded against the current stage.
    fn file(&mut self, name: &str) -> PathBuf {
        self.files.push((self.stage, name.to_owned()));
        self.dir.join(name)
    }

    /// Records a sidecar written next to `name`.
    fn sidecar(&mut self, name: &str) {
        let side = io::sidecar_path(Path::new(name));
        self.files.push((self.stage, side.to_string_lossy().into_owned()));
    }
}

/// Outcome of [`run_pipeline`]; the manifest is written either way.
#[derive(Debug)]
pub struct PipelineRun {
    pub manifest: Manifest,
    pub error: Option<Error>,
}

/// Runs every configured stage, writing artifacts and `manifest.json` into
/// `out_dir`. A failing stage stops the run; files written before it stay.
pub fn run_pipeline(config: &ExperimentConfig, out_dir: &Path) -> Result<PipelineRun> {
    let experiment = Experiment::new(config.clone())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rec = Recorder {
        dir: out_dir.to_owned(),
        stage: "data",
        files: Vec::new(),
    };
    let result = run_stages(&experiment, &mut rec);
    let mut artifacts = Vec::with_capacity(rec.files.len());
    for (stage, file) in &rec.files {
        let path = out_dir.join(file);
        if path.is_file() {
            artifacts.push(Artifact {
                stage: (*stage).into(),
                file: file.clone(),
                sha256: file_hash(&path)?,
            });
        }
    }
    let manifest = Manifest {
        manifest_version: 1,
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: rmdgraph_core::VERSION.into(),
        config_sha256: config_hash(config),
        seed: config.seed,
        config: portable(config),
        status: if result.is_ok() { "ok" } else { "failed" }.into(),
        failed_stage: result.is_err().then(|| rec.stage.into()),
        error: result.as_ref().err().map(ToString::to_string),
        artifacts,
    };
    io::write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(PipelineRun {
        manifest,
        error: result.err(),
    })
}

fn run_stages(exp: &Experiment, rec: &mut Recorder) -> Result<()> {
    let config = exp.config();
    let seed = config.seed;

    rec.enter("data");
    let data = exp.dataset(seed)?;
    io::write_dataset(&rec.file("data.csv"), &data)?;

    rec.enter("selection");
    let selection = exp.select(&data, seed)?;
    if let Some(sel) = &selection {
        io::write_json(&rec.file("selection.json"), sel)?;
    }

    rec.enter("graph");
    let spec = exp.graph_spec(&data, selection.as_ref())?;
    let built = exp.build_graph(&data, &spec, seed)?;
    if let Some(ranks) = &built.ranks {
        io::write_ranks(&rec.file("ranks.csv"), ranks)?;
        rec.sidecar("ranks.csv");
    }
    io::write_graph(&rec.file("graph.csv"), &built.graph)?;
    rec.sidecar("graph.csv");

    rec.enter("learn");
    let learned = exp.learn(&data, &built, selection.as_ref(), seed)?;
    match &learned {
        Learned::Clusters(p) => io::write_partition(&rec.file("partition.csv"), p)?,
        Learned::Propagated { labels, result } => {
            io::write_labels(&rec.file("labels.csv"), labels)?;
            io::write_partition(&rec.file("prediction.csv"), &result.prediction)?;
        }
    }

    rec.enter("eval");
    if let Some(summary) = exp.evaluate(&data, &learned)? {
        io::write_json(&rec.file("eval.json"), &summary)?;
    }

    if let Some(cut) = &config.cutline {
        rec.enter("cutline");
        let curve = sweep_cutline(
            |run_seed| exp.dataset(run_seed),
            &config.graph,
            cut.axis,
            &cut.positions.values(),
            cut.runs,
            derive_seed(seed, "cutline-runs", 0),
        )?;
        io::write_cut_curve(&rec.file("curve.csv"), &curve)?;
    }

    if let Some(sweep) = &config.delta_sweep {
        rec.enter("delta-sweep");
        let curve = exp.delta_curve(&data, sweep, seed)?;
        io::write_delta_curve(&rec.file("delta_curve.csv"), &curve)?;
        io::write_json(&rec.file("flat_spots.json"), &curve.flat_spots)?;
    }
    Ok(())
}
