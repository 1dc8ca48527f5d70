use uavsem::channel::{realize_trace, EnvironmentParams, TrajectoryPlan};
use uavsem::predictor::{predict_geometric, predict_noisy_oracle, PredictorInput};

fn hover(n: usize) -> TrajectoryPlan {
    TrajectoryPlan::new([0.0; 3], vec![[0.0, 0.0, 100.0]; n], 1.0).unwrap()
}

#[test]
fn noisy_oracle_error_statistics() {
    const N: usize = 100_000;
    let truth = realize_trace(&hover(N), &EnvironmentParams::default(), 1).unwrap();
    let pred = predict_noisy_oracle(&truth, 10.0, 2).unwrap();
    let err: Vec<f64> = pred
        .snr_hat_db
        .iter()
        .zip(truth.snr_db())
        .map(|(p, t)| p - t)
        .collect();
    let mean = err.iter().sum::<f64>() / N as f64;
    let sd = (err.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / N as f64).sqrt();
    assert!((sd / 10.0 - 1.0).abs() <= 0.02, "sd {sd}");
    assert!(mean.abs() <= 0.1, "mean {mean}");
    for (g, u) in pred.snr_hat_db.iter().zip(&pred.usable_hat) {
        assert_eq!(*u, *g >= truth.snr_threshold_db);
    }
}

#[test]
fn zero_error_reproduces_the_truth() {
    let traj = TrajectoryPlan::new(
        [0.0; 3],
        (0..10)
            .map(|k| [-250.0 + 50.0 * k as f64, 0.0, 100.0])
            .collect(),
        1.0,
    )
    .unwrap();
    let truth = realize_trace(&traj, &EnvironmentParams::default(), 5).unwrap();
    let pred = predict_noisy_oracle(&truth, 0.0, 9).unwrap();
    assert_eq!(pred.snr_hat_db, truth.snr_db());
    assert_eq!(
        pred.usable_hat,
        truth.slots.iter().map(|s| s.usable).collect::<Vec<_>>()
    );
}

#[test]
fn geometric_forecast_is_exact_without_shadowing() {
    let env = EnvironmentParams {
        shadow_std_los_db: 0.0,
        shadow_std_nlos_db: 0.0,
        ..EnvironmentParams::default()
    };
    let plan = TrajectoryPlan::new(
        [0.0; 3],
        (0..10)
            .map(|k| [-250.0 + 50.0 * k as f64, 0.0, 100.0])
            .collect(),
        1.0,
    )
    .unwrap();
    let truth = realize_trace(&plan, &env, 0).unwrap();
    let input =
        PredictorInput::new(vec![0.0], vec![[-300.0, 0.0, 100.0]], plan, Some(0.0)).unwrap();
    let pred = predict_geometric(&input, &env).unwrap();
    for (p, t) in pred.snr_hat_db.iter().zip(truth.snr_db()) {
        assert!((p - t).abs() < 1e-9);
    }
}

#[test]
fn forecast_length_always_matches_the_plan() {
    let plan = TrajectoryPlan::new([0.0; 3], vec![[10.0, 0.0, 100.0]; 7], 1.0).unwrap();
    let input =
        PredictorInput::new(vec![12.0, 13.0], vec![[0.0, 0.0, 100.0]; 2], plan, None).unwrap();
    assert_eq!(
        predict_geometric(&input, &EnvironmentParams::default())
            .unwrap()
            .len(),
        7
    );
    assert!(PredictorInput::new(vec![], vec![], hover(3), None).is_err());
}
