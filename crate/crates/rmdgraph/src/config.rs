//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rmdgraph_core::data::MixtureSpec;
use rmdgraph_core::graph::GraphSpec;
use rmdgraph_core::select::{BaselineMethod, BaselineSearch, DEFAULT_FLAT_POS_FRACTION, DEFAULT_FLAT_REL_TOL, DEFAULT_LAMBDA_GRID};

use crate::error::{Error, Result};

/// Built-in mixtures by name: `unbalanced-pair` and `unbalanced-triple`.
pub fn mixture_preset(name: &str) -> Option<MixtureSpec> {
    match name {
        "unbalanced-pair" => Some(MixtureSpec::unbalanced_pair()),
        "unbalanced-triple" => Some(MixtureSpec::unbalanced_triple()),
        _ => None,
    }
}

fn spec_or_preset<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<MixtureSpec, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Name(String),
        Spec(MixtureSpec),
    }
    match Raw::deserialize(de)? {
        Raw::Spec(spec) => Ok(spec),
        Raw::Name(name) => {
            mixture_preset(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown mixture preset {name:?}")))
        }
    }
}

/// A complete, seeded experiment: data, graph, learner and optional
/// selection and sweep stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataSource,
    pub graph: GraphSpec,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutline: Option<CutlineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_sweep: Option<DeltaSweepConfig>,
    /// Artifact directory; the `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Mixture {
        /// A full spec, or a preset name (see [`mixture_preset`]).
        #[serde(deserialize_with = "spec_or_preset")]
        spec: MixtureSpec,
        n: usize,
    },
    TwoMoons {
        n: usize,
        fractions: [f64; 3],
        noise: f64,
    },
    /// A CSV file, optionally subsampled to fixed per-class counts.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        per_class: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Algorithm {
    /// Spectral clustering into `clusters` groups.
    Sc {
        clusters: usize,
        #[serde(default)]
        normalized: bool,
    },
    /// Label propagation from `labeled` points drawn from the ground truth,
    /// at least one per class.
    Grf { labeled: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Selection {
    /// Chooses `λ` for the configured RMD graph.
    Lambda {
        delta: f64,
        #[serde(default = "default_lambda_grid")]
        lambda_grid: Vec<f64>,
    },
    /// Chooses `(k, σ)` for a baseline graph; the configured graph is ignored.
    Baseline {
        delta: f64,
        method: BaselineMethod,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_grid: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_exponents: Option<Vec<i32>>,
    },
}

fn default_lambda_grid() -> Vec<f64> {
    DEFAULT_LAMBDA_GRID.to_vec()
}

impl Selection {
    pub fn delta(&self) -> f64 {
        match *self {
            Self::Lambda { delta, .. } | Self::Baseline { delta, .. } => delta,
        }
    }

    pub fn baseline_search(&self, clusters: usize, normalized: bool) -> Option<BaselineSearch> {
        let Self::Baseline {
            method,
            k_grid,
            sigma_exponents,
            ..
        } = self
        else {
            return None;
        };
        let standard = BaselineSearch::standard(*method);
        Some(BaselineSearch {
            k_grid: k_grid.clone().unwrap_or(standard.k_grid),
            sigma_exponents: sigma_exponents.clone().unwrap_or(standard.sigma_exponents),
            clusters,
            normalized,
            ..standard
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Positions {
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl Positions {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::List(ref v) => v.clone(),
            Self::Range { from, to, step } => {
                let count = ((to - from) / step + 1e-9).floor() as usize;
                (0..=count).map(|i| from + step * i as f64).collect()
            }
        }
    }
}

/// Hyperplane sweep `x[axis] = position`, averaged over `runs` seeded draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutlineConfig {
    pub axis: usize,
    pub positions: Positions,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSweepConfig {
    /// Strictly descending.
    pub deltas: Vec<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Position tolerance as a fraction of the projected data spread.
    #[serde(default = "default_pos_fraction")]
    pub pos_fraction: f64,
}

fn default_rel_tol() -> f64 {
    DEFAULT_FLAT_REL_TOL
}

fn default_pos_fraction() -> f64 {
    DEFAULT_FLAT_POS_FRACTION
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file, or the config embedded in a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let body = match value.get("manifest_version") {
            Some(_) => value
                .get("config")
                .cloned()
                .ok_or_else(|| invalid("manifest has no config"))?,
            None => value,
        };
        let config: Self =
            serde_json::from_value(body).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Class count the learner works with.
    pub fn clusters(&self) -> Option<usize> {
        match self.algorithm {
            Algorithm::Sc { clusters, .. } => Some(clusters),
            Algorithm::Grf { .. } => None,
        }
    }

    /// Dimension of generated data; `None` for files.
    fn generated_dim(&self) -> Option<usize> {
        match &self.data {
            DataSource::Mixture { spec, .. } => Some(spec.dim()),
            DataSource::TwoMoons { .. } => Some(2),
            DataSource::File { .. } => None,
        }
    }

    /// Checks everything that can be checked without running a stage.
    pub fn validate(&self) -> Result<()> {
        match &self.data {
            DataSource::Mixture { spec, n } => {
                spec.validate().map_err(|e| invalid(e.to_string()))?;
                if *n < 2 {
                    return Err(invalid("data.n must be at least 2"));
                }
            }
            DataSource::TwoMoons { n, fractions, noise } => {
                if *n < 2 {
                    return Err(invalid("data.n must be at least 2"));
                }
                if fractions.iter().any(|f| !(*f >= 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(invalid("data.fractions must be non-negative and sum to 1"));
                }
                if !(*noise >= 0.0 && noise.is_finite()) {
                    return Err(invalid("data.noise must be finite and non-negative"));
                }
            }
            DataSource::File { path, per_class } => {
                if !path.is_file() {
                    return Err(invalid(format!("data.path {} does not exist", path.display())));
                }
                if per_class.as_ref().is_some_and(Vec::is_empty) {
                    return Err(invalid("data.per_class is empty"));
                }
            }
        }
        self.validate_graph()?;
        match self.algorithm {
            Algorithm::Sc { clusters, .. } if clusters < 2 => {
                return Err(invalid("algorithm.clusters must be at least 2"))
            }
            Algorithm::Grf { labeled } if labeled == 0 => {
                return Err(invalid("algorithm.labeled must be positive"))
            }
            _ => {}
        }
        let is_rmd = matches!(self.graph, GraphSpec::Rmd { .. });
        if let Some(sel) = &self.selection {
            let k = self.clusters().ok_or_else(|| invalid("selection needs algorithm.kind = sc"))?;
            let delta = sel.delta();
            if !(delta > 0.0 && delta < 1.0 / k as f64) {
                return Err(invalid(format!("selection.delta must lie in (0, 1/{k})")));
            }
            match sel {
                Selection::Lambda { lambda_grid, .. } => {
                    if !is_rmd {
                        return Err(invalid("lambda selection needs graph.method = rmd"));
                    }
                    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
                        return Err(invalid("selection.lambda_grid must be a non-empty list in [0, 1]"));
                    }
                }
                Selection::Baseline { k_grid, sigma_exponents, .. } => {
                    if k_grid.as_ref().is_some_and(|g| g.is_empty() || g.contains(&0)) {
                        return Err(invalid("selection.k_grid must be a non-empty list of positive values"));
                    }
                    if sigma_exponents.as_ref().is_some_and(Vec::is_empty) {
                        return Err(invalid("selection.sigma_exponents is empty"));
                    }
                }
            }
        }
        if let Some(c) = &self.cutline {
            let positions = c.positions.values();
            if positions.is_empty() || positions.iter().any(|p| !p.is_finite()) {
                return Err(invalid("cutline.positions must be a non-empty list of finite values"));
            }
            if let Positions::Range { step, .. } = c.positions {
                if !(step > 0.0) {
                    return Err(invalid("cutline.positions.step must be positive"));
                }
            }
            if positions.windows(2).any(|w| w[1] < w[0]) {
                return Err(invalid("cutline.positions must be sorted"));
            }
            if c.runs == 0 {
                return Err(invalid("cutline.runs must be positive"));
            }
            if self.generated_dim().is_some_and(|d| c.axis >= d) {
                return Err(invalid("cutline.axis is out of range"));
            }
        }
        if let Some(s) = &self.delta_sweep {
            if !is_rmd || self.clusters() != Some(2) {
                return Err(invalid("delta_sweep needs graph.method = rmd and two clusters"));
            }
            if s.deltas.is_empty() || s.deltas.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("delta_sweep.deltas must be non-empty and strictly descending"));
            }
            if s.deltas.iter().any(|d| !(*d > 0.0 && *d < 0.5)) {
                return Err(invalid("delta_sweep.deltas must lie in (0, 1/2)"));
            }
            if !(s.rel_tol >= 0.0) || !(s.pos_fraction >= 0.0) {
                return Err(invalid("delta_sweep tolerances must be non-negative"));
            }
        }
        Ok(())
    }

    fn validate_graph(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let ok = match &self.graph {
            GraphSpec::Knn { k, .. } => *k > 0,
            GraphSpec::Rmd {
                k,
                lambda,
                variant,
                resamples,
                ..
            } => {
                if let Some(v) = variant {
                    v.validate().map_err(|e| invalid(format!("graph.variant: {e}")))?;
                }
                *k > 0 && (0.0..=1.0).contains(lambda) && *resamples > 0
            }
            GraphSpec::Epsilon { eps, .. } => positive(*eps),
            GraphSpec::FullRbf { sigma } => positive(*sigma),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("graph parameters out of range"))
        }
    }
}
