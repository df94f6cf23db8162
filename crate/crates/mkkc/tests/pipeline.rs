//! End-to-end library pipeline tests: simulated multi-view data through
//! kernel preparation, the alternating solver, spectral rounding, and
//! the benchmark grid runner.

use mkkc::bench::{run_grid, ExperimentGrid, MetricKind};
use mkkc::kernels::{KernelBundle, KernelSpec};
use mkkc::metrics::adjusted_rand_index;
use mkkc::rounding::round_assignment;
use mkkc::simgen::{generate, Perturbation, Scenario, ScenarioSpec};
use mkkc::solver::{solve, SolveConfig, Variant};

const RBF: KernelSpec = KernelSpec::Rbf { gamma: 0.5 };

fn pipeline_ari(views: &[ndarray::Array2<f64>], truth: &[usize], variant: Variant) -> f64 {
    let bundle = KernelBundle::from_views(views, &[RBF]).expect("bundle");
    let config = SolveConfig::new(3, variant);
    let result = solve(&bundle, &config).expect("solve");
    let outcome = round_assignment(result.embedding.matrix(), 3, 100, 0).expect("round");
    adjusted_rand_index(outcome.assignment.labels(), truth).expect("ari")
}

#[test]
fn joint_views_beat_any_single_view() {
    // Each simulated view carries only part of the cluster structure,
    // so clustering one view alone must stay well below the joint run.
    let data = generate(&ScenarioSpec::new(Scenario::B, 0)).expect("data");
    let joint = pipeline_ari(&data.views, data.truth.labels(), Variant::Uniform);

    for view in &data.views {
        let single = pipeline_ari(
            std::slice::from_ref(view),
            data.truth.labels(),
            Variant::Uniform,
        );
        assert!(
            joint >= 0.98 && single <= 0.70 && joint - single >= 0.25,
            "joint ari {joint:.4} should dominate single-view ari {single:.4}"
        );
    }
}

#[test]
fn minmin_weights_discount_a_noise_view() {
    let mut spec = ScenarioSpec::new(Scenario::B, 0);
    spec.perturbation = Perturbation::Noise { count: 3 };
    let data = generate(&spec).expect("data");
    let bundle = KernelBundle::from_views(&data.views, &[RBF]).expect("bundle");

    // The perturbation always lands on the first view. The min-min rule
    // weights views inversely to their residual, so the noise-padded view
    // must end up below the clean one. (The min-max rule deliberately tilts
    // the other way, toward the hardest view, so no ordering is asserted
    // for it — only that every view stays active.)
    let minmin = solve(&bundle, &SolveConfig::new(3, Variant::MinMin)).expect("solve");
    let theta = minmin.theta.theta();
    assert!(
        theta[0] < theta[1],
        "noise-padded view weight {:.4} should stay below the clean view's {:.4}",
        theta[0],
        theta[1]
    );

    let minmax = solve(&bundle, &SolveConfig::new(3, Variant::MinMaxL2)).expect("solve");
    assert!(
        minmax.theta.theta().iter().all(|&w| w > 0.0),
        "min-max weights must stay positive, got {:?}",
        minmax.theta.theta()
    );
}

#[test]
fn rounding_is_deterministic_for_a_fixed_seed() {
    let data = generate(&ScenarioSpec::new(Scenario::A, 3)).expect("data");
    let bundle = KernelBundle::from_views(&data.views, &[RBF]).expect("bundle");
    let result = solve(&bundle, &SolveConfig::new(3, Variant::MinMaxL2)).expect("solve");
    let first = round_assignment(result.embedding.matrix(), 3, 25, 42).expect("round");
    let second = round_assignment(result.embedding.matrix(), 3, 25, 42).expect("round");
    assert_eq!(first.assignment.labels(), second.assignment.labels());
    assert_eq!(first.wcss, second.wcss);
}

#[test]
fn small_grid_runs_clean_and_keeps_adaptive_weights_positive() {
    let mut grid = ExperimentGrid::table_preset();
    grid.scenarios = vec![Scenario::B];
    grid.levels = vec![Perturbation::None, Perturbation::Noise { count: 2 }];
    grid.variants = vec![Variant::MinMaxL2, Variant::Uniform];
    grid.metrics = vec![MetricKind::Ari];
    grid.replicates = 2;
    grid.n_per_cluster = 15;
    grid.kmeans_starts = 10;

    let run = run_grid(&grid).expect("grid run");
    assert!(!run.any_error);
    assert_eq!(run.rows.len(), 2 * 2); // levels x variants, one metric
    assert_eq!(run.trajectories.len(), 2 * 2);
    for row in &run.rows {
        assert!(row.value.is_finite(), "cell {row:?} should have a score");
        assert!((-0.5..=1.0).contains(&row.value));
        if row.variant == "minmax" {
            let min_weight =
                row.theta_final.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(
                min_weight > 0.0,
                "adaptive weights must stay positive, got {:?}",
                row.theta_final
            );
        }
    }
}
