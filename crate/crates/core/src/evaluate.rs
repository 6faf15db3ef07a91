//! Error rates against ground truth and seeded multi-trial aggregation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};
use crate::spectral::Partition;
use crate::ssl::LabelSet;

const MAX_MATCHED_CLASSES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub error_rate: f64,
    /// `confusion[class][cluster]` counts.
    pub confusion: Vec<Vec<usize>>,
    /// `permutation[cluster]` is the class matched to that cluster.
    pub permutation: Vec<usize>,
    pub n: usize,
}

/// Calls `visit` with every permutation of `0..k` (Heap's algorithm).
fn for_each_permutation(k: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut c = vec![0; k];
    visit(&perm);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Error rate under the best one-to-one matching of clusters to classes.
pub fn clustering_error(pred: &Partition, truth: &[usize]) -> Result<EvalReport> {
    let n = truth.len();
    if pred.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: pred.len(),
        });
    }
    let classes = truth.iter().copied().max().map_or(0, |m| m + 1);
    let k = classes.max(pred.k());
    if k > MAX_MATCHED_CLASSES {
        return Err(Error::TooManyClasses(k));
    }
    let mut confusion = vec![vec![0; k]; k];
    for (&t, &p) in truth.iter().zip(pred.assignment()) {
        confusion[t][p] += 1;
    }
    let mut best = (0, Vec::new());
    for_each_permutation(k, |perm| {
        let matched: usize = perm
            .iter()
            .enumerate()
            .map(|(cluster, &class)| confusion[class][cluster])
            .sum();
        if best.1.is_empty() || matched > best.0 {
            best = (matched, perm.to_vec());
        }
    });
    confusion.truncate(classes);
    for row in &mut confusion {
        row.truncate(pred.k());
    }
    let mut permutation = best.1;
    permutation.truncate(pred.k());
    Ok(EvalReport {
        error_rate: if n == 0 { 0.0 } else { 1.0 - best.0 as f64 / n as f64 },
        confusion,
        permutation,
        n,
    })
}

/// Fraction of unlabeled points whose predicted class differs from the truth.
pub fn ssl_error(pred: &Partition, truth: &[usize], labels: &LabelSet) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let labeled = labels.is_labeled(truth.len());
    let (wrong, total) = pred
        .assignment()
        .iter()
        .zip(truth)
        .zip(&labeled)
        .filter(|(_, &l)| !l)
        .fold((0usize, 0usize), |(w, t), ((p, c), _)| (w + usize::from(p != c), t + 1));
    Ok(if total == 0 { 0.0 } else { wrong as f64 / total as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialsReport {
    pub trials: Vec<TrialOutcome>,
    pub mean: f64,
    /// Sample standard deviation over successful trials (0 for one trial).
    pub std: f64,
    pub succeeded: usize,
}

/// Seed of trial `t` under base seed `base`.
pub fn trial_seed(base: u64, t: usize) -> u64 {
    derive_seed(base, "trial", t as u64)
}

/// Aggregates per-trial outcomes; fails only when every trial failed.
pub fn summarize_trials(outcomes: Vec<(u64, Result<f64>)>) -> Result<TrialsReport> {
    let mut first_error = None;
    let trials: Vec<TrialOutcome> = outcomes
        .into_iter()
        .enumerate()
        .map(|(trial, (seed, r))| match r {
            Ok(e) => TrialOutcome {
                trial,
                seed,
                error_rate: Some(e),
                failure: None,
            },
            Err(err) => {
                let msg = err.to_string();
                first_error.get_or_insert(err);
                TrialOutcome {
                    trial,
                    seed,
                    error_rate: None,
                    failure: Some(msg),
                }
            }
        })
        .collect();
    if trials.is_empty() {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let values: Vec<f64> = trials.iter().filter_map(|t| t.error_rate).collect();
    if values.is_empty() {
        return Err(first_error.expect("all trials failed"));
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let std = if values.len() < 2 {
        0.0
    } else {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0))
    };
    Ok(TrialsReport {
        trials,
        mean,
        std,
        succeeded: values.len(),
    })
}

/// Runs `trial` once per derived seed and aggregates the error rates.
pub fn run_trials(
    count: usize,
    base_seed: u64,
    mut trial: impl FnMut(u64) -> Result<f64>,
) -> Result<TrialsReport> {
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    summarize_trials(
        (0..count)
            .map(|t| {
                let seed = trial_seed(base_seed, t);
                (seed, trial(seed))
            })
            .collect(),
    )
}

/// Seeded subsample with `counts[c]` points of class `c`; kept points retain
/// their original order.
pub fn subsample_per_class(data: &Dataset, counts: &[usize], seed: u64) -> Result<Dataset> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::InvalidLabels("subsampling needs labels".into()))?;
    let classes = data.num_classes().unwrap_or(0);
    if counts.len() != classes {
        return Err(Error::LengthMismatch {
            expected: classes,
            got: counts.len(),
        });
    }
    let mut keep = Vec::new();
    for (c, &want) in counts.iter().enumerate() {
        let mut members: Vec<usize> = (0..data.n()).filter(|&i| labels[i] == c).collect();
        if members.len() < want {
            return Err(Error::InvalidParameter(format!(
                "class {c} has {} points, {want} requested",
                members.len()
            )));
        }
        members.shuffle(&mut rng(derive_seed(seed, "subsample", c as u64)));
        keep.extend_from_slice(&members[..want]);
    }
    keep.sort_unstable();
    data.subset(&keep)
}

/// Draws `count` labeled points with at least one per class: one random
/// member of each class first, then the rest uniformly from the remainder.
pub fn draw_label_set(truth: &[usize], count: usize, seed: u64) -> Result<LabelSet> {
    let k = truth.iter().copied().max().map_or(0, |m| m + 1);
    if count < k || count > truth.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {count} labels covering {k} classes from {} points",
            truth.len()
        )));
    }
    let mut r = rng(derive_seed(seed, "labels", 0));
    let mut chosen = vec![false; truth.len()];
    let mut pairs = Vec::with_capacity(count);
    for c in 0..k {
        let members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == c).collect();
        let &i = members
            .choose(&mut r)
            .ok_or_else(|| Error::InvalidLabels(format!("class {c} has no points")))?;
        chosen[i] = true;
        pairs.push((i, c));
    }
    let mut rest: Vec<usize> = (0..truth.len()).filter(|&i| !chosen[i]).collect();
    rest.shuffle(&mut r);
    pairs.extend(rest[..count - k].iter().map(|&i| (i, truth[i])));
    pairs.sort_unstable();
    LabelSet::new(pairs, k, truth.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(a: &[usize], k: usize) -> Partition {
        Partition::new(a.to_vec(), k).unwrap()
    }

    #[test]
    fn perfect_and_swapped() {
        let truth = [0, 0, 1, 1, 2];
        assert_eq!(clustering_error(&part(&truth, 3), &truth).unwrap().error_rate, 0.0);
        let r = clustering_error(&part(&[2, 2, 0, 0, 1], 3), &truth).unwrap();
        assert_eq!(r.error_rate, 0.0);
        assert_eq!(r.permutation, vec![1, 2, 0]);
    }

    #[test]
    fn one_miss_in_four() {
        let r = clustering_error(&part(&[0, 0, 1, 0], 2), &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.error_rate, 0.25);
        assert_eq!(r.confusion, vec![vec![2, 0], vec![1, 1]]);
    }

    #[test]
    fn too_many_classes() {
        let truth: Vec<usize> = (0..7).collect();
        assert_eq!(
            clustering_error(&part(&truth, 7), &truth),
            Err(Error::TooManyClasses(7))
        );
    }

    #[test]
    fn permutations_are_complete() {
        let mut seen = Vec::new();
        for_each_permutation(4, |p| seen.push(p.to_vec()));
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn trials_aggregate() {
        let r = run_trials(1, 7, |_| Ok(0.25)).unwrap();
        assert_eq!((r.mean, r.std), (0.25, 0.0));
        let mut i = 0.0;
        let r = run_trials(3, 7, |_| {
            i += 1.0;
            if i == 2.0 {
                Err(Error::DegenerateClustering)
            } else {
                Ok(i)
            }
        })
        .unwrap();
        assert_eq!(r.succeeded, 2);
        assert_eq!(r.mean, 2.0);
        assert!((r.std - libm::sqrt(2.0)).abs() < 1e-15);
        assert!(r.trials[1].failure.is_some());
        assert!(run_trials(2, 7, |_| Err(Error::DegenerateClustering)).is_err());
    }

    #[test]
    fn label_draw_covers_classes() {
        let truth: Vec<usize> = (0..100).map(|i| usize::from(i >= 95)).collect();
        for seed in 0..20 {
            let l = draw_label_set(&truth, 20, seed).unwrap();
            assert_eq!(l.pairs().len(), 20);
            assert!(l.pairs().iter().any(|&(_, c)| c == 1));
        }
    }

    #[test]
    fn ssl_error_skips_labeled() {
        let labels = LabelSet::new(vec![(0, 0), (3, 1)], 2, 4).unwrap();
        let e = ssl_error(&part(&[1, 0, 0, 0], 2), &[0, 0, 1, 1], &labels).unwrap();
        assert_eq!(e, 0.5);
    }
}
