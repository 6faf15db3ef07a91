//! Seeded statistical checks of generators, ranks, and model selection.

use proptest::prelude::*;
use rmdgraph_core::data::{gen_gaussian_mixture, gen_two_moons_gaussian, Dataset, MixtureSpec};
use rmdgraph_core::evaluate::clustering_error;
use rmdgraph_core::graph::{build_rmd_graph, WeightScheme};
use rmdgraph_core::rank::{compute_ranks_ustat, StatVariant};
use rmdgraph_core::select::{delta_sweep, optimize_lambda, LambdaSearch};
use rmdgraph_core::spectral::Partition;
use rmdgraph_core::theory::{analytic_p, DensityModel};

#[test]
fn mixture_counts_are_multinomial() {
    let spec = MixtureSpec::unbalanced_pair();
    let counts: Vec<f64> = (0..50)
        .map(|seed| {
            let ds = gen_gaussian_mixture(&spec, 1000, seed).unwrap();
            ds.labels().unwrap().iter().filter(|&&c| c == 1).count() as f64
        })
        .collect();
    // Minority component has weight 0.1; its count is Binomial(1000, 0.1).
    let mean = counts.iter().sum::<f64>() / 50.0;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 49.0;
    assert!((mean - 100.0).abs() < 4.0 * (90.0f64 / 50.0).sqrt(), "mean {mean}");
    assert!(var > 45.0 && var < 180.0, "variance {var}");
}

#[test]
fn generators_are_deterministic() {
    let spec = MixtureSpec::unbalanced_triple();
    assert_eq!(
        gen_gaussian_mixture(&spec, 300, 4).unwrap(),
        gen_gaussian_mixture(&spec, 300, 4).unwrap()
    );
    assert_ne!(
        gen_gaussian_mixture(&spec, 300, 4).unwrap(),
        gen_gaussian_mixture(&spec, 300, 5).unwrap()
    );
    let moons = gen_two_moons_gaussian(500, [0.45, 0.45, 0.1], 0.1, 2).unwrap();
    let labels = moons.labels().unwrap();
    assert_eq!(labels.iter().filter(|&&c| c == 2).count(), 50);
}

fn mean_abs_rank_error(n: usize, resamples: usize, seed: u64) -> f64 {
    let model = DensityModel::new(MixtureSpec::standard_normal(1)).unwrap();
    let ds = gen_gaussian_mixture(model.spec(), n, seed).unwrap();
    let l = ((n as f64).powf(0.6) / 2.0).ceil() as usize;
    let ranks = compute_ranks_ustat(&ds, StatVariant::AvgKnn { l }, resamples, seed).unwrap();
    ds.rows()
        .zip(&ranks.ranks)
        .map(|(x, r)| (r - analytic_p(&model, x).unwrap()).abs())
        .sum::<f64>()
        / n as f64
}

#[test]
fn ranks_approach_sublevel_mass() {
    let small: f64 = (0..3).map(|s| mean_abs_rank_error(300, 5, s)).sum::<f64>() / 3.0;
    let large: f64 = (0..3).map(|s| mean_abs_rank_error(1200, 5, s)).sum::<f64>() / 3.0;
    assert!(large < small, "{large} vs {small}");
    assert!(large < 0.08);
}

#[test]
fn resampling_reduces_rank_variance() {
    let ds = gen_gaussian_mixture(&MixtureSpec::standard_normal(2), 400, 1).unwrap();
    let spread = |resamples: usize| {
        let runs: Vec<Vec<f64>> = (0..8)
            .map(|s| {
                compute_ranks_ustat(&ds, StatVariant::AvgKnn { l: 10 }, resamples, 100 + s)
                    .unwrap()
                    .ranks
            })
            .collect();
        (0..ds.n())
            .map(|i| {
                let m = runs.iter().map(|r| r[i]).sum::<f64>() / 8.0;
                runs.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / 7.0
            })
            .sum::<f64>()
            / ds.n() as f64
    };
    let one = spread(1);
    let five = spread(5);
    assert!(five < 0.5 * one, "B=5 variance {five}, B=1 variance {one}");
}

#[test]
fn rmd_mean_degree_is_near_k() {
    let ds = gen_gaussian_mixture(&MixtureSpec::unbalanced_pair(), 600, 3).unwrap();
    let ranks = compute_ranks_ustat(&ds, StatVariant::AvgKnn { l: 20 }, 5, 3).unwrap();
    assert!(ranks.ranks.iter().all(|&r| r > 0.0 && r <= 1.0));
    for lambda in [0.0, 0.4, 0.8] {
        let (_, profile) = build_rmd_graph(&ds, &ranks, 20, lambda, WeightScheme::Unit).unwrap();
        let mean = profile.degrees.iter().sum::<usize>() as f64 / ds.n() as f64;
        assert!((19.0..=21.0).contains(&mean), "lambda {lambda}: mean degree {mean}");
        let lo = (20.0 * lambda).round() as usize;
        let hi = (20.0 * (2.0 - lambda)).round() as usize;
        assert!(profile.degrees.iter().all(|&d| d >= lo.max(1) && d <= hi));
    }
}

#[test]
fn p_is_monotone_in_density() {
    let model = DensityModel::new(MixtureSpec::unbalanced_triple()).unwrap();
    let mut pts: Vec<(f64, f64)> = (0..40)
        .map(|i| {
            let y = [-3.0 + 0.4 * i as f64, 0.3];
            (model.density(&y), analytic_p(&model, &y).unwrap())
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        assert!(w[0].1 <= w[1].1 + 1e-7, "{w:?}");
    }
}

fn two_blobs() -> Dataset {
    let spec = MixtureSpec::from_ratios(
        &[0.7, 0.3],
        &[&[0.0, 0.0], &[6.0, 0.0]],
        &[&[1.0, 1.0], &[1.0, 1.0]],
    )
    .unwrap();
    gen_gaussian_mixture(&spec, 200, 8).unwrap()
}

#[test]
fn lambda_one_grid_is_plain_knn_clustering() {
    let ds = two_blobs();
    let search = LambdaSearch {
        lambda_grid: vec![1.0],
        ..LambdaSearch::new(8)
    };
    let sel = optimize_lambda(&ds, &search, 0.05, 1).unwrap();
    assert_eq!(sel.trace.len(), 1);
    let err = clustering_error(&sel.partition, ds.labels().unwrap()).unwrap();
    assert!(err.error_rate < 0.02);
}

#[test]
fn delta_curve_is_monotone_and_selection_reproducible() {
    let ds = two_blobs();
    let search = LambdaSearch::new(8);
    let deltas = [0.4, 0.3, 0.2, 0.1, 0.05];
    let curve = delta_sweep(&ds, &search, &deltas, 2).unwrap();
    let cuts: Vec<f64> = curve.points.iter().filter_map(|p| p.cut).collect();
    for w in cuts.windows(2) {
        assert!(w[1] <= w[0]);
    }
    let again = delta_sweep(&ds, &search, &deltas, 2).unwrap();
    assert_eq!(curve, again);

    let sel = optimize_lambda(&ds, &search, 0.2, 2).unwrap();
    let best = sel
        .trace
        .iter()
        .enumerate()
        .filter(|(_, e)| e.feasible)
        .min_by(|a, b| a.1.cut.total_cmp(&b.1.cut).then(a.0.cmp(&b.0)))
        .unwrap();
    assert_eq!(best.0, sel.index);
    assert!(sel.partition.min_size() as f64 >= 0.2 * ds.n() as f64);
}

proptest! {
    #[test]
    fn clustering_error_ignores_relabeling(
        truth in proptest::collection::vec(0usize..3, 6..40),
        noise in proptest::collection::vec(0usize..3, 40),
        perm_index in 0usize..6,
    ) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let perm = perms[perm_index];
        let pred: Vec<usize> = truth.iter().zip(&noise).map(|(&t, &z)| if z == 0 { (t + 1) % 3 } else { t }).collect();
        let base = clustering_error(&Partition::new(pred.clone(), 3).unwrap(), &truth).unwrap();
        let relabeled: Vec<usize> = pred.iter().map(|&c| perm[c]).collect();
        let moved = clustering_error(&Partition::new(relabeled, 3).unwrap(), &truth).unwrap();
        prop_assert!((base.error_rate - moved.error_rate).abs() < 1e-15);
        let truth_perm: Vec<usize> = truth.iter().map(|&c| perm[c]).collect();
        let moved = clustering_error(&Partition::new(pred, 3).unwrap(), &truth_perm).unwrap();
        prop_assert!((base.error_rate - moved.error_rate).abs() < 1e-15);
    }
}
