use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rmdgraph::config::{self, ExperimentConfig, Positions};
use rmdgraph::io::{self, parse_list};
use rmdgraph::pipeline::{run_pipeline, Experiment};
use rmdgraph::sweep::{sweep_cutline, LimitCheck};
use rmdgraph::{configure_threads, Error, Result};
use rmdgraph_core::data::{gen_gaussian_mixture, gen_two_moons_gaussian, MixtureSpec};
use rmdgraph_core::evaluate::{clustering_error, ssl_error};
use rmdgraph_core::graph::{GraphSpec, WeightScheme};
use rmdgraph_core::rank::{compute_ranks_ustat, StatVariant};
use rmdgraph_core::select::{
    delta_sweep, detect_flat_spots, optimize_baseline, optimize_lambda, BaselineMethod,
    BaselineSearch, LambdaSearch, DEFAULT_FLAT_POS_FRACTION, DEFAULT_FLAT_REL_TOL,
};
use rmdgraph_core::spectral::spectral_cluster;
use rmdgraph_core::ssl::grf_propagate;

#[derive(Parser)]
#[command(name = "rmdgraph", version, about = "Rank-modulated degree graphs for clustering and label propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Gaussian mixture or the two-moons-plus-blob set.
    Gen(GenArgs),
    /// Estimate density ranks.
    Rank(RankArgs),
    /// Build a graph.
    Build(BuildArgs),
    /// Spectral clustering of a graph.
    Cluster(ClusterArgs),
    /// Label propagation on a graph.
    Ssl(SslArgs),
    /// Choose λ (RMD) or (k, σ) (baselines) under a minimum cluster size.
    Select(SelectArgs),
    /// Optimal cut and boundary position over a descending δ grid.
    SweepDelta(SweepDeltaArgs),
    /// Seed-averaged cut values of axis-aligned hyperplanes.
    SweepCutline(SweepCutlineArgs),
    /// Empirical scaled RatioCut of hyperplanes against the predicted limit.
    LimitCheck(LimitCheckArgs),
    /// Error rate of a partition against dataset labels.
    Eval(EvalArgs),
    /// Repeated seeded runs of an experiment config.
    Trials(TrialsArgs),
    /// Run an experiment config (or rerun a manifest) end to end.
    Run(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Mixture as a JSON file, inline JSON, or `unbalanced-pair` / `unbalanced-triple`.
    #[arg(long, conflicts_with = "moons", required_unless_present = "moons")]
    mixture: Option<String>,
    /// Two moons plus a Gaussian blob.
    #[arg(long)]
    moons: bool,
    #[arg(long, default_value = "0.45,0.45,0.1")]
    fractions: String,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    AvgKnn,
    WeightedAvgKnn,
    Lnn,
    EpsCount,
}

#[derive(Args)]
struct RankParamsArgs {
    /// Neighbor scale of the rank statistic (defaults to k where one is given).
    #[arg(long)]
    l: Option<usize>,
    /// Number of half-split resamples.
    #[arg(long = "B", default_value_t = 5)]
    resamples: usize,
    #[arg(long, value_enum, default_value = "avg-knn")]
    variant: VariantArg,
    /// Radius for the eps-count statistic.
    #[arg(long = "rank-eps")]
    rank_eps: Option<f64>,
}

impl RankParamsArgs {
    fn variant(&self, default_l: Option<usize>) -> Result<StatVariant> {
        let l = || {
            self.l
                .or(default_l)
                .ok_or_else(|| Error::Config("--l is required".into()))
        };
        Ok(match self.variant {
            VariantArg::AvgKnn => StatVariant::AvgKnn { l: l()? },
            VariantArg::WeightedAvgKnn => StatVariant::WeightedAvgKnn { l: l()? },
            VariantArg::Lnn => StatVariant::LnnDistance { l: l()? },
            VariantArg::EpsCount => StatVariant::EpsCount {
                eps: self
                    .rank_eps
                    .ok_or_else(|| Error::Config("--rank-eps is required for eps-count".into()))?,
            },
        })
    }
}

#[derive(Args)]
struct RankArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    params: RankParamsArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Knn,
    Rmd,
    Eps,
    FullRbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Unit,
    Rbf,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, value_enum, default_value = "rmd")]
    method: MethodArg,
    #[arg(long, default_value_t = 30)]
    k: usize,
    #[arg(long, default_value_t = 0.4)]
    lambda: f64,
    #[arg(long)]
    eps: Option<f64>,
    /// RBF bandwidth, for `--weight rbf` and `full-rbf`.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "unit")]
    weight: WeightArg,
    #[command(flatten)]
    rank: RankParamsArgs,
}

impl GraphArgs {
    fn spec(&self) -> Result<GraphSpec> {
        let sigma = || {
            self.sigma
                .ok_or_else(|| Error::Config("--sigma is required".into()))
        };
        let weight = match self.weight {
            WeightArg::Unit => WeightScheme::Unit,
            WeightArg::Rbf => WeightScheme::Rbf { sigma: sigma()? },
        };
        Ok(match self.method {
            MethodArg::Knn => GraphSpec::Knn { k: self.k, weight },
            MethodArg::Rmd => GraphSpec::Rmd {
                k: self.k,
                lambda: self.lambda,
                variant: Some(self.rank.variant(Some(self.k))?),
                resamples: self.rank.resamples,
                weight,
            },
            MethodArg::Eps => GraphSpec::Epsilon {
                eps: self
                    .eps
                    .ok_or_else(|| Error::Config("--eps is required for eps graphs".into()))?,
                weight,
            },
            MethodArg::FullRbf => GraphSpec::FullRbf { sigma: sigma()? },
        })
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    graph: GraphArgs,
    /// Precomputed ranks for RMD graphs; computed from `--seed` when absent.
    #[arg(long)]
    ranks: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long = "K", default_value_t = 2)]
    clusters: usize,
    #[arg(long)]
    normalized: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SslArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lambda,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Knn,
    FullRbf,
    Eps,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "lambda")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// λ grid (lambda mode) or k grid (baseline mode), comma-separated.
    #[arg(long)]
    grid: Option<String>,
    /// σ exponents j in σ = 2^j d̃_k (baseline mode).
    #[arg(long, allow_hyphen_values = true)]
    sigma_exponents: Option<String>,
    #[arg(long, value_enum, default_value = "knn")]
    baseline: BaselineArg,
    #[arg(long, default_value_t = 30)]
    k: usize,
    #[command(flatten)]
    rank: RankParamsArgs,
    #[arg(long = "K", default_value_t = 2)]
    clusters: usize,
    #[arg(long)]
    normalized: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the selected partition.
    #[arg(long)]
    partition: Option<PathBuf>,
}

#[derive(Args)]
struct SweepDeltaArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Strictly descending δ values.
    #[arg(long, default_value = "0.30,0.25,0.20,0.15,0.10,0.05")]
    deltas: String,
    #[arg(long, default_value = "0,0.2,0.4,0.6,0.8,1")]
    grid: String,
    #[arg(long, default_value_t = 30)]
    k: usize,
    #[command(flatten)]
    rank: RankParamsArgs,
    #[arg(long, default_value_t = DEFAULT_FLAT_REL_TOL)]
    rel_tol: f64,
    #[arg(long, default_value_t = DEFAULT_FLAT_POS_FRACTION)]
    pos_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the detected flat spots as JSON.
    #[arg(long)]
    flat_spots: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCutlineArgs {
    /// Fixed dataset; each run only reseeds ranks and tie-breaks.
    #[arg(long = "in", conflicts_with = "mixture", required_unless_present = "mixture")]
    input: Option<PathBuf>,
    /// Mixture resampled in every run (needs `--n`).
    #[arg(long, requires = "n")]
    mixture: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 0)]
    axis: usize,
    /// Comma-separated positions; otherwise `--from/--to/--step`.
    #[arg(long, allow_hyphen_values = true)]
    positions: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LimitCheckArgs {
    #[arg(long, default_value = "unbalanced-pair")]
    mixture: String,
    #[arg(long, default_value_t = 0)]
    cut_axis: usize,
    /// One or more comma-separated positions.
    #[arg(long, default_value = "1.0", allow_hyphen_values = true)]
    cut_at: String,
    #[arg(long, default_value_t = 0.4)]
    lambda: f64,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    k: usize,
    #[arg(long = "B", default_value_t = 5)]
    resamples: usize,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    /// Labeled dataset CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Labeled points to leave out of the score (label propagation).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrialsArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "T", default_value_t = 20)]
    trials: usize,
    /// Base seed; defaults to the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_mixture(arg: &str) -> Result<MixtureSpec> {
    let spec = match config::mixture_preset(arg) {
        Some(spec) => spec,
        None if arg.trim_start().starts_with('{') => {
            serde_json::from_str(arg).map_err(|e| Error::Config(format!("mixture: {e}")))?
        }
        None => io::read_json(Path::new(arg)).map_err(|e| Error::Config(e.to_string()))?,
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

fn list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>> {
    parse_list(text).map_err(|e| Error::Config(format!("--{flag}: {e}")))
}

fn lambda_search(k: usize, rank: &RankParamsArgs, grid: &str, clusters: usize, normalized: bool) -> Result<LambdaSearch> {
    Ok(LambdaSearch {
        variant: rank.variant(Some(k))?,
        resamples: rank.resamples,
        lambda_grid: list("grid", grid)?,
        clusters,
        normalized,
        ..LambdaSearch::new(k)
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => {
            let data = if a.moons {
                let f: Vec<f64> = list("fractions", &a.fractions)?;
                let fractions: [f64; 3] = f
                    .try_into()
                    .map_err(|_| Error::Config("--fractions needs three values".into()))?;
                gen_two_moons_gaussian(a.n, fractions, a.noise, a.seed)?
            } else {
                let spec = load_mixture(a.mixture.as_deref().expect("clap enforces one source"))?;
                gen_gaussian_mixture(&spec, a.n, a.seed)?
            };
            io::write_dataset(&a.out, &data)
        }
        Command::Rank(a) => {
            let data = io::read_dataset(&a.input)?;
            let ranks = compute_ranks_ustat(&data, a.params.variant(None)?, a.params.resamples, a.seed)?;
            io::write_ranks(&a.out, &ranks)
        }
        Command::Build(a) => {
            let data = io::read_dataset(&a.input)?;
            let spec = a.graph.spec()?;
            let built = match &a.ranks {
                Some(path) => spec.build_with_ranks(&data, io::read_ranks(path)?)?,
                None => spec.build(&data, a.seed)?,
            };
            io::write_graph(&a.out, &built.graph)
        }
        Command::Cluster(a) => {
            let graph = io::read_graph(&a.graph)?;
            let p = spectral_cluster(&graph, a.clusters, a.normalized, a.seed)?;
            io::write_partition(&a.out, &p)
        }
        Command::Ssl(a) => {
            let graph = io::read_graph(&a.graph)?;
            let labels = io::read_labels(&a.labels, graph.n())?;
            io::write_partition(&a.out, &grf_propagate(&graph, &labels)?.prediction)
        }
        Command::Select(a) => {
            let data = io::read_dataset(&a.input)?;
            let sel = match a.mode {
                ModeArg::Lambda => {
                    let grid = a.grid.as_deref().unwrap_or("0,0.2,0.4,0.6,0.8,1");
                    let search = lambda_search(a.k, &a.rank, grid, a.clusters, a.normalized)?;
                    optimize_lambda(&data, &search, a.delta, a.seed)?
                }
                ModeArg::Baseline => {
                    let method = match a.baseline {
                        BaselineArg::Knn => BaselineMethod::Knn,
                        BaselineArg::FullRbf => BaselineMethod::FullRbf,
                        BaselineArg::Eps => BaselineMethod::Epsilon,
                    };
                    let standard = BaselineSearch::standard(method);
                    let search = BaselineSearch {
                        k_grid: match &a.grid {
                            Some(g) => list("grid", g)?,
                            None => standard.k_grid.clone(),
                        },
                        sigma_exponents: match &a.sigma_exponents {
                            Some(s) => list("sigma-exponents", s)?,
                            None => standard.sigma_exponents.clone(),
                        },
                        clusters: a.clusters,
                        normalized: a.normalized,
                        ..standard
                    };
                    optimize_baseline(&data, &search, a.delta, a.seed)?
                }
            };
            if let Some(path) = &a.partition {
                io::write_partition(path, &sel.partition)?;
            }
            io::write_json(&a.out, &sel)
        }
        Command::SweepDelta(a) => {
            let data = io::read_dataset(&a.input)?;
            let search = lambda_search(a.k, &a.rank, &a.grid, 2, false)?;
            let mut curve = delta_sweep(&data, &search, &list::<f64>("deltas", &a.deltas)?, a.seed)?;
            curve.flat_spots = detect_flat_spots(&curve, a.rel_tol, a.pos_fraction * curve.position_scale);
            io::write_delta_curve(&a.out, &curve)?;
            if let Some(path) = &a.flat_spots {
                io::write_json(path, &curve.flat_spots)?;
            }
            Ok(())
        }
        Command::SweepCutline(a) => {
            let spec = a.graph.spec()?;
            let positions = match &a.positions {
                Some(p) => list("positions", p)?,
                None => Positions::Range {
                    from: a.from,
                    to: a.to,
                    step: a.step,
                }
                .values(),
            };
            let curve = match (&a.input, &a.mixture) {
                (Some(path), _) => {
                    let data = io::read_dataset(path)?;
                    sweep_cutline(|_| Ok(data.clone()), &spec, a.axis, &positions, a.runs, a.seed)?
                }
                (None, Some(m)) => {
                    let mixture = load_mixture(m)?;
                    let n = a.n.expect("clap requires --n");
                    sweep_cutline(
                        |s| Ok(gen_gaussian_mixture(&mixture, n, s)?),
                        &spec,
                        a.axis,
                        &positions,
                        a.runs,
                        a.seed,
                    )?
                }
                (None, None) => unreachable!("clap requires a data source"),
            };
            io::write_cut_curve(&a.out, &curve)
        }
        Command::LimitCheck(a) => {
            let spec = load_mixture(&a.mixture)?;
            let check = LimitCheck {
                axis: a.cut_axis,
                lambda: a.lambda,
                n: a.n,
                k: a.k,
                resamples: a.resamples,
                runs: a.seeds,
                seed: a.seed,
            };
            let report = check.run(&spec, &list::<f64>("cut-at", &a.cut_at)?)?;
            match &a.out {
                Some(path) => io::write_json(path, &report),
                None => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                    Ok(())
                }
            }
        }
        Command::Eval(a) => {
            let pred = io::read_partition(&a.pred)?;
            let data = io::read_dataset(&a.truth)?;
            let truth = data
                .labels()
                .ok_or_else(|| Error::format(&a.truth, "dataset has no label column"))?;
            let report = clustering_error(&pred, truth)?;
            match &a.labels {
                Some(path) => {
                    let labels = io::read_labels(path, data.n())?;
                    let value = serde_json::json!({
                        "error_rate": ssl_error(&pred, truth, &labels)?,
                        "scored_points": "unlabeled",
                        "matching": report,
                    });
                    io::write_json(&a.out, &value)
                }
                None => io::write_json(&a.out, &report),
            }
        }
        Command::Trials(a) => {
            let config = ExperimentConfig::load(&a.config)?;
            let seed = a.seed.unwrap_or(config.seed);
            let report = Experiment::new(config)?.trials(a.trials, seed)?;
            io::write_json(&a.out, &report)
        }
        Command::Run(a) => {
            let config = ExperimentConfig::load(&a.config)?;
            let out = a
                .out
                .or_else(|| config.output_dir.clone())
                .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
            let run = run_pipeline(&config, &out)?;
            match run.error {
                Some(e) => {
                    eprintln!(
                        "stage {} failed; partial artifacts in {}",
                        run.manifest.failed_stage.as_deref().unwrap_or("?"),
                        out.display()
                    );
                    Err(e)
                }
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
