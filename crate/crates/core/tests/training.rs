use ndarray::Array2;
use prsb::rng;
use prsb::{train, Dataset, FusedSpec, LearnerSpec, LossSpec, RegularizerSpec, Target, TrainConfig};
use rand::Rng;

/// y depends on the first two of m features.
fn toy_regression(n: usize, m: usize, shift: f64, seed: u64) -> Dataset {
    let mut r = rng::stream(seed, 60);
    let x = Array2::from_shape_fn((n, m), |_| r.random_range(-1.0..1.0));
    let y = (0..n)
        .map(|i| shift + 2.0 * x[[i, 0]] - x[[i, 1]] * x[[i, 1]] + 0.1 * r.random_range(-1.0..1.0))
        .collect();
    Dataset::new(x, Target::Regression(y)).unwrap()
}

fn quick(seed: u64) -> TrainConfig {
    TrainConfig {
        n_models: 20,
        n_epochs: 4,
        restarts: 2,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn same_seed_same_result() {
    let d = toy_regression(80, 6, 0.0, 1);
    let a = train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &quick(3)).unwrap();
    let b = train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &quick(3)).unwrap();
    assert_eq!(a.alpha, b.alpha);
    assert_eq!(a.report, b.report);
    assert_eq!(a.ensemble, b.ensemble);
}

#[test]
fn parallel_restarts_do_not_change_the_result() {
    let d = toy_regression(60, 5, 0.0, 2);
    let seq = train(&d, &LearnerSpec::knn(), &LossSpec::mse(), &quick(4)).unwrap();
    let cfg = TrainConfig {
        parallel_restarts: true,
        ..quick(4)
    };
    let par = train(&d, &LearnerSpec::knn(), &LossSpec::mse(), &cfg).unwrap();
    assert_eq!(seq.report, par.report);
}

#[test]
fn zero_learning_rate_keeps_alpha_and_flattens_each_minibatch() {
    let d = toy_regression(60, 5, 0.0, 3);
    let cfg = TrainConfig {
        eta: 0.0,
        ..quick(5)
    };
    let out = train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &cfg).unwrap();
    assert!(out.alpha.as_slice().iter().all(|&a| a == cfg.initial_alpha()));
    for mb in &out.report.minibatches {
        assert!(mb.objectives.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(mb.steps, cfg.max_steps_between_retrain);
    }
}

#[test]
fn traces_have_one_entry_per_epoch_and_minibatch() {
    let d = toy_regression(60, 5, 0.0, 4);
    let cfg = quick(6);
    let out = train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &cfg).unwrap();
    let r = &out.report;
    assert_eq!(r.epoch_objectives.len(), cfg.n_epochs);
    assert_eq!(r.minibatches.len(), cfg.n_epochs * cfg.n_minibatches());
    assert_eq!(r.t_eff_trace.len(), r.minibatches.len());
    assert_eq!(r.retrain_steps.len(), r.minibatches.len());
    assert_eq!(r.restarts.len(), cfg.restarts);
    assert!(r.retrain_steps.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn more_restarts_never_select_a_worse_objective() {
    let d = toy_regression(60, 5, 0.0, 5);
    let one = train(&d, &LearnerSpec::knn(), &LossSpec::mse(), &TrainConfig { restarts: 1, ..quick(7) }).unwrap();
    let many = train(&d, &LearnerSpec::knn(), &LossSpec::mse(), &TrainConfig { restarts: 6, ..quick(7) }).unwrap();
    // Restart 0 uses the same stream in both runs.
    assert_eq!(one.report.restarts[0].score, many.report.restarts[0].score);
    assert!(many.report.selection_score <= one.report.selection_score);
}

#[test]
fn alpha_stays_in_the_box_under_large_steps() {
    let d = toy_regression(60, 5, 0.0, 6);
    let cfg = TrainConfig {
        eta: 50.0,
        ..quick(8)
    };
    let out = train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &cfg).unwrap();
    assert!(out.alpha.as_slice().iter().all(|a| (0.0..=1.0).contains(a)));
}

#[test]
fn predictions_are_in_target_units() {
    let shift = 1000.0;
    let d = toy_regression(80, 4, shift, 7);
    let out = train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &quick(9)).unwrap();
    let y_mean = (0..80).map(|i| d.target_value(i)).sum::<f64>() / 80.0;
    assert!((out.ensemble.offset() - y_mean).abs() < 1e-9);
    let preds = out.ensemble.predict_dataset(&d);
    let mse = preds
        .iter()
        .enumerate()
        .map(|(i, p)| (p.point() - d.target_value(i)).powi(2))
        .sum::<f64>()
        / 80.0;
    assert!(mse < 2.0, "train MSE {mse}");
}

#[test]
fn relevant_features_rise() {
    let d = toy_regression(200, 8, 0.0, 8);
    let cfg = TrainConfig {
        n_models: 40,
        n_epochs: 15,
        restarts: 1,
        seed: 10,
        ..TrainConfig::default()
    };
    let out = train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &cfg).unwrap();
    let a = out.alpha.as_slice();
    let noise_max = a[2..].iter().cloned().fold(0.0, f64::max);
    assert!(a[0] > noise_max, "alpha {a:?}");
}

#[test]
fn regularizers_reject_bad_shapes() {
    let d = toy_regression(40, 6, 0.0, 9);
    let cfg = TrainConfig {
        regularizer: RegularizerSpec {
            fused: Some(FusedSpec {
                height: 2,
                width: 2,
                lambda: 0.1,
            }),
            ..RegularizerSpec::default()
        },
        ..quick(1)
    };
    assert!(train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &cfg).is_err());
}

#[test]
fn loss_must_fit_the_task() {
    let d = toy_regression(40, 3, 0.0, 10);
    assert!(train(&d, &LearnerSpec::tree(), &LossSpec::cross_entropy(), &quick(1)).is_err());
}
