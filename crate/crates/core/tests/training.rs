use std::time::{Duration, Instant};

use mgcn_core::config::RunConfig;
use mgcn_core::data::{make_synthetic, MultiViewDataset, SplitSpec, make_split};
use mgcn_core::experiment::{model_inputs, prepare_graphs, run_repeats, run_single, Metrics};
use mgcn_core::graph::{FeatureMatrix, Metric};
use mgcn_core::model::{train, ModelConfig, ModelInputs, ModelState};
use mgcn_core::{Error, Matrix, Tape};

/// Two well separated blobs in each of two views.
fn separable(m: usize) -> MultiViewDataset {
    let labels: Vec<usize> = (0..m).map(|i| usize::from(i >= m / 2)).collect();
    let views = (0..2)
        .map(|v| {
            let x = Matrix::from_fn(m, 2, |i, j| {
                let centre = if labels[i] == 0 { -3.0 } else { 3.0 };
                centre + 0.1 * (((i * 7 + j * 3 + v * 5) % 11) as f64 - 5.0)
            });
            FeatureMatrix::new(x, v)
        })
        .collect();
    MultiViewDataset::new("blobs", views, labels, 2).unwrap()
}

#[test]
fn separable_training_set_is_fit_within_200_iterations() {
    let data = separable(30);
    let inputs = model_inputs(&data, prepare_graphs(&data, 5, Metric::Euclidean).unwrap()).unwrap();
    let split = make_split(&data, &SplitSpec { ratio: 0.1, seed: 4, stratified: true }).unwrap();
    assert_eq!(split.labeled.len(), 3);
    let labels = split.label_set(&data).unwrap();
    let config = ModelConfig {
        epochs: 200,
        ..ModelConfig::default()
    };
    let mut model = ModelState::init(&config, 30, 4, 2, 2, 1).unwrap();
    let history = train(&mut model, &inputs, &labels, &data.labels, &config).unwrap();
    assert!(history.iter().any(|h| h.train_acc == 1.0));
    assert!(history.iter().all(|h| h.loss >= 0.0 && h.loss.is_finite()));
    assert!(history.last().unwrap().loss < history[0].loss);
}

fn small_config() -> RunConfig {
    RunConfig {
        epochs: 15,
        hidden_dim: 8,
        repeats: 3,
        k: 5,
        seed: 77,
        ..RunConfig::default()
    }
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let data = make_synthetic(60, 2, 3, 0.5, 1).unwrap();
    let cfg = small_config();
    let inputs = model_inputs(&data, prepare_graphs(&data, cfg.k, cfg.metric).unwrap()).unwrap();
    let a = run_single(&data, &inputs, &cfg, 1).unwrap();
    let b = run_single(&data, &inputs, &cfg, 1).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.model, b.model);
    let c = run_single(&data, &inputs, &cfg, 2).unwrap();
    assert_ne!(a.split.labeled, c.split.labeled);
}

#[test]
fn job_count_does_not_change_metrics() {
    let data = make_synthetic(60, 2, 3, 0.5, 1).unwrap();
    let cfg = small_config();
    let inputs = model_inputs(&data, prepare_graphs(&data, cfg.k, cfg.metric).unwrap()).unwrap();
    let one = Metrics::from_outcomes(&data, &cfg, &run_repeats(&data, &inputs, &cfg, 1).unwrap());
    let many = Metrics::from_outcomes(&data, &cfg, &run_repeats(&data, &inputs, &cfg, 3).unwrap());
    assert_eq!(one.to_json(), many.to_json());
}

#[test]
fn ablation_variants_have_the_expected_parameters() {
    let data = make_synthetic(40, 2, 2, 0.5, 1).unwrap();
    let inputs = model_inputs(&data, prepare_graphs(&data, 5, Metric::Euclidean).unwrap()).unwrap();
    for (glm, dns) in [(false, false), (true, false), (false, true), (true, true)] {
        let cfg = RunConfig { glm, dns, epochs: 3, ..small_config() };
        let out = run_single(&data, &inputs, &cfg, 0).unwrap();
        assert_eq!(out.model.glm.is_some(), glm);
        if !dns {
            // θ gets a zero gradient and Adam leaves it in place
            assert_eq!(out.model.raw_threshold, 0.0);
        }
    }
}

#[test]
fn non_finite_input_aborts_training() {
    let data = make_synthetic(20, 2, 2, 0.5, 1).unwrap();
    let graphs = prepare_graphs(&data, 3, Metric::Euclidean).unwrap();
    let mut features = data.concatenated_features().unwrap();
    features.set(0, 0, f64::INFINITY);
    let inputs = ModelInputs::new(graphs, features).unwrap();
    let config = ModelConfig {
        epochs: 2,
        hidden_dim: 4,
        ..ModelConfig::default()
    };
    let split = make_split(&data, &SplitSpec { ratio: 0.2, seed: 0, stratified: true }).unwrap();
    let labels = split.label_set(&data).unwrap();
    let mut model = ModelState::init(&config, 20, 8, 2, 2, 0).unwrap();
    let err = train(&mut model, &inputs, &labels, &data.labels, &config).unwrap_err();
    assert!(matches!(err, Error::Domain(_) | Error::NonFiniteGradient(_)), "{err:?}");
}

fn forward_time(m: usize) -> Duration {
    let data = make_synthetic(m, 2, 3, 0.5, 0).unwrap();
    let inputs = model_inputs(&data, prepare_graphs(&data, 10, Metric::Euclidean).unwrap()).unwrap();
    let config = ModelConfig::default();
    let model = ModelState::init(&config, m, 8, 2, 3, 0).unwrap();
    (0..5)
        .map(|_| {
            let start = Instant::now();
            let mut tape = Tape::new();
            model.forward(&mut tape, &inputs, &config).unwrap();
            start.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn doubling_nodes_costs_at_most_ten_times() {
    let small = forward_time(100);
    let large = forward_time(200);
    let ratio = large.as_secs_f64() / small.as_secs_f64();
    assert!(ratio <= 10.0, "{small:?} -> {large:?} ({ratio:.1}x)");
}
