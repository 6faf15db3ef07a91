//! Seed-averaged hyperplane sweeps and limit-value checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rmdgraph_core::curve::{average_curves, cut_curve, AveragedPoint};
use rmdgraph_core::data::{gen_gaussian_mixture, MixtureSpec};
use rmdgraph_core::graph::{build_rmd_graph, directed_crossings, GraphSpec, WeightScheme};
use rmdgraph_core::rank::{compute_ranks_ustat, StatVariant};
use rmdgraph_core::seed::derive_seed;
use rmdgraph_core::spectral::{cut_metrics, hyperplane_partition, Hyperplane};
use rmdgraph_core::theory::{limit_ratiocut, scaled_ratiocut, DensityModel, LimitCutPrediction};
use rmdgraph_core::Dataset;

use crate::error::Result;

/// Seed of run `r` of a sweep seeded with `seed`.
pub fn run_seed(seed: u64, r: usize) -> u64 {
    derive_seed(seed, "run", r as u64)
}

/// Cut and RatioCut of the hyperplanes `x[axis] = position`, averaged over
/// `runs` runs. Run `r` draws its data from `dataset(run_seed(seed, r))` and
/// rebuilds the graph from `spec`.
pub fn sweep_cutline(
    dataset: impl Fn(u64) -> Result<Dataset> + Sync,
    spec: &GraphSpec,
    axis: usize,
    positions: &[f64],
    runs: usize,
    seed: u64,
) -> Result<Vec<AveragedPoint>> {
    let curves = (0..runs)
        .into_par_iter()
        .map(|r| {
            let s = run_seed(seed, r);
            let data = dataset(s)?;
            let built = spec.build(&data, derive_seed(s, "rank", 0))?;
            Ok(cut_curve(&data, &built.graph, axis, positions, derive_seed(s, "cutline", 0))?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(average_curves(&curves)?)
}

/// Empirical scaled RatioCut of one hyperplane next to its predicted limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheckRow {
    pub position: f64,
    pub predicted: LimitCutPrediction,
    /// Mean over runs, on the symmetrized graph (each edge counted once).
    pub scaled_union: Option<f64>,
    /// Mean over runs, counting each point's own links across the plane.
    pub scaled_directed: Option<f64>,
    pub valid_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheckReport {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub axis: usize,
    pub runs: usize,
    pub rows: Vec<LimitCheckRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCheck {
    pub axis: usize,
    pub lambda: f64,
    pub n: usize,
    /// Degree scale; the rank statistic uses `l = k`.
    pub k: usize,
    pub resamples: usize,
    pub runs: usize,
    pub seed: u64,
}

impl LimitCheck {
    /// Compares `(1/k)(n/k)^{1/d} RatioCut` of unit-weight RMD graphs on
    /// mixture samples with its predicted limit at each position.
    pub fn run(&self, spec: &MixtureSpec, positions: &[f64]) -> Result<LimitCheckReport> {
        let model = DensityModel::new(spec.clone())?;
        let predicted = positions
            .par_iter()
            .map(|&at| Ok(limit_ratiocut(&model, self.axis, at, self.lambda)?))
            .collect::<Result<Vec<_>>>()?;
        let per_run = (0..self.runs)
            .into_par_iter()
            .map(|r| self.one_run(spec, positions, run_seed(self.seed, r)))
            .collect::<Result<Vec<_>>>()?;
        let rows = positions
            .iter()
            .zip(predicted)
            .enumerate()
            .map(|(j, (&position, predicted))| {
                let valid: Vec<(f64, f64)> = per_run.iter().filter_map(|run| run[j]).collect();
                let mean = |f: fn(&(f64, f64)) -> f64| {
                    (!valid.is_empty()).then(|| valid.iter().map(f).sum::<f64>() / valid.len() as f64)
                };
                LimitCheckRow {
                    position,
                    predicted,
                    scaled_union: mean(|v| v.0),
                    scaled_directed: mean(|v| v.1),
                    valid_runs: valid.len(),
                }
            })
            .collect();
        Ok(LimitCheckReport {
            n: self.n,
            k: self.k,
            lambda: self.lambda,
            axis: self.axis,
            runs: self.runs,
            rows,
        })
    }

    /// `(union, directed)` scaled values per position; `None` when a side is empty.
    fn one_run(&self, spec: &MixtureSpec, positions: &[f64], seed: u64) -> Result<Vec<Option<(f64, f64)>>> {
        let data = gen_gaussian_mixture(spec, self.n, derive_seed(seed, "data", 0))?;
        let d = data.dim();
        let ranks = compute_ranks_ustat(
            &data,
            StatVariant::AvgKnn { l: self.k },
            self.resamples,
            derive_seed(seed, "rank", 0),
        )?;
        let (graph, profile) = build_rmd_graph(&data, &ranks, self.k, self.lambda, WeightScheme::Unit)?;
        positions
            .iter()
            .enumerate()
            .map(|(j, &at)| {
                let plane = Hyperplane::axis_aligned(d, self.axis, at);
                let part = hyperplane_partition(&data, &plane, derive_seed(seed, "cutline", j as u64))?;
                if part.is_degenerate() {
                    return Ok(None);
                }
                let union = cut_metrics(&graph, &part)?.ratio_cut;
                let sizes = part.sizes();
                let balance = 1.0 / sizes[0] as f64 + 1.0 / sizes[1] as f64;
                let directed = directed_crossings(&data, &profile, part.assignment())? as f64 * balance;
                Ok(Some((
                    scaled_ratiocut(union, self.n, self.k, d),
                    scaled_ratiocut(directed, self.n, self.k, d),
                )))
            })
            .collect()
    }
}
