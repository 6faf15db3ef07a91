//! Cut values of axis-aligned hyperplanes swept across a dataset.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed::derive_seed;
use crate::spectral::{cut_metrics, hyperplane_partition, Hyperplane};

/// Cut of one hyperplane on one graph; `None` when a side is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub position: f64,
    pub cut: Option<f64>,
    pub ratio_cut: Option<f64>,
}

/// Curve values averaged over runs that produced a valid cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedPoint {
    pub position: f64,
    /// NaN when no run was valid.
    pub cut: f64,
    pub ratio_cut: f64,
    pub valid_runs: usize,
}

impl AveragedPoint {
    pub fn is_degenerate(&self) -> bool {
        self.valid_runs == 0
    }
}

/// Cut and RatioCut of the hyperplanes `x[axis] = position`.
pub fn cut_curve(
    data: &Dataset,
    graph: &Graph,
    axis: usize,
    positions: &[f64],
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if axis >= data.dim() {
        return Err(Error::InvalidParameter("cut axis out of range".into()));
    }
    if positions.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("positions must be sorted".into()));
    }
    positions
        .iter()
        .enumerate()
        .map(|(i, &position)| {
            let plane = Hyperplane::axis_aligned(data.dim(), axis, position);
            let partition = hyperplane_partition(data, &plane, derive_seed(seed, "cutline", i as u64))?;
            if partition.is_degenerate() {
                return Ok(CurvePoint {
                    position,
                    cut: None,
                    ratio_cut: None,
                });
            }
            let report = cut_metrics(graph, &partition)?;
            Ok(CurvePoint {
                position,
                cut: Some(report.cut),
                ratio_cut: Some(report.ratio_cut),
            })
        })
        .collect()
}

/// Pointwise mean of curves sharing the same positions.
pub fn average_curves(curves: &[Vec<CurvePoint>]) -> Result<Vec<AveragedPoint>> {
    let Some(first) = curves.first() else {
        return Ok(Vec::new());
    };
    if let Some(c) = curves.iter().find(|c| c.len() != first.len()) {
        return Err(Error::LengthMismatch {
            expected: first.len(),
            got: c.len(),
        });
    }
    Ok((0..first.len())
        .map(|i| {
            let valid: Vec<&CurvePoint> = curves
                .iter()
                .map(|c| &c[i])
                .filter(|p| p.cut.is_some())
                .collect();
            let m = valid.len() as f64;
            let (cut, ratio_cut) = if valid.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (
                    valid.iter().filter_map(|p| p.cut).sum::<f64>() / m,
                    valid.iter().filter_map(|p| p.ratio_cut).sum::<f64>() / m,
                )
            };
            AveragedPoint {
                position: first[i].position,
                cut,
                ratio_cut,
                valid_runs: valid.len(),
            }
        })
        .collect())
}

/// Position with the smallest averaged RatioCut, ignoring degenerate rows.
pub fn argmin_ratio_cut(curve: &[AveragedPoint]) -> Option<f64> {
    curve
        .iter()
        .filter(|p| !p.is_degenerate())
        .min_by(|a, b| a.ratio_cut.total_cmp(&b.ratio_cut))
        .map(|p| p.position)
}
