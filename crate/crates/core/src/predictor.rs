//! SNR forecasts over the scheduling horizon.
//!
//! Two predictors share one contract: both return exactly K dB values and
//! derive usability from the threshold alone.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{
    correlation_coefficient, finish_slot, slot_geometry, ChannelTrace, EnvironmentParams,
    TrajectoryPlan, Vec3,
};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedTrace {
    pub snr_hat_db: Vec<f64>,
    pub usable_hat: Vec<bool>,
}

impl PredictedTrace {
    pub fn from_snr(snr_hat_db: Vec<f64>, gamma_min_db: f64) -> Self {
        let usable_hat = snr_hat_db.iter().map(|&g| g >= gamma_min_db).collect();
        Self {
            snr_hat_db,
            usable_hat,
        }
    }

    pub fn len(&self) -> usize {
        self.snr_hat_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snr_hat_db.is_empty()
    }

    /// Same forecast with every slot marked usable.
    pub fn all_usable(&self) -> Self {
        Self {
            snr_hat_db: self.snr_hat_db.clone(),
            usable_hat: vec![true; self.snr_hat_db.len()],
        }
    }
}

/// History and plan available to a predictor at the start of a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorInput {
    pub history_snr_db: Vec<f64>,
    pub history_traj: Vec<Vec3>,
    pub planned: TrajectoryPlan,
    pub history_shadowing_db: Option<f64>,
}

impl PredictorInput {
    pub fn new(
        history_snr_db: Vec<f64>,
        history_traj: Vec<Vec3>,
        planned: TrajectoryPlan,
        history_shadowing_db: Option<f64>,
    ) -> Result<Self> {
        if history_snr_db.is_empty() || history_snr_db.len() != history_traj.len() {
            return Err(Error::InvalidParameter(format!(
                "predictor history needs M >= 1 matching SNR/trajectory entries, got {} and {}",
                history_snr_db.len(),
                history_traj.len()
            )));
        }
        planned.validate()?;
        Ok(Self {
            history_snr_db,
            history_traj,
            planned,
            history_shadowing_db,
        })
    }

    pub fn horizon(&self) -> usize {
        self.planned.horizon()
    }
}

/// Realized SNR plus i.i.d. `N(0, sigma_err^2)` dB errors.
pub fn predict_noisy_oracle(
    truth: &ChannelTrace,
    sigma_err_db: f64,
    seed: u64,
) -> Result<PredictedTrace> {
    if !(sigma_err_db >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_err must be nonnegative, got {sigma_err_db}"
        )));
    }
    let mut rng = rng_from_seed(derive_seed(seed, stream::PREDICTOR, 0));
    let snr = truth
        .slots
        .iter()
        .map(|s| s.snr_db + sigma_err_db * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(PredictedTrace::from_snr(snr, truth.snr_threshold_db))
}

/// Deterministic geometry forecast along the planned trajectory with the last
/// shadowing estimate decayed by the cumulative correlation coefficient.
pub fn predict_geometric(
    input: &PredictorInput,
    env: &EnvironmentParams,
) -> Result<PredictedTrace> {
    let plan = &input.planned;
    let speeds = plan.speeds();
    let mut chi = input.history_shadowing_db.unwrap_or(0.0);
    let mut snr = Vec::with_capacity(plan.horizon());
    for (k, (q, v)) in plan.waypoints.iter().zip(speeds).enumerate() {
        let (d, theta, state, pl) = slot_geometry(q, &plan.ground_user, k, env)?;
        chi *= correlation_coefficient(v, plan.slot_duration, env);
        snr.push(finish_slot(d, theta, state, pl, chi, env).snr_db);
    }
    Ok(PredictedTrace::from_snr(snr, env.snr_threshold_db))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    NoisyOracle,
    Geometric,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{realize_trace, CorrelationMode};

    fn noiseless_env() -> EnvironmentParams {
        EnvironmentParams {
            shadow_std_los_db: 0.0,
            shadow_std_nlos_db: 0.0,
            ..Default::default()
        }
        .with_link_budget_db(100.0)
    }

    fn flyby() -> TrajectoryPlan {
        let pts = (0..10)
            .map(|k| [-250.0 + 50.0 * k as f64, 20.0, 100.0])
            .collect();
        TrajectoryPlan::new([0.0; 3], pts, 1.0).unwrap()
    }

    #[test]
    fn zero_sigma_is_perfect_csi() {
        let env = EnvironmentParams::default();
        let tr = realize_trace(&flyby(), &env, 11).unwrap();
        let p = predict_noisy_oracle(&tr, 0.0, 3).unwrap();
        assert_eq!(p.snr_hat_db, tr.snr_db());
        assert_eq!(
            p.usable_hat,
            tr.slots.iter().map(|s| s.usable).collect::<Vec<_>>()
        );
    }

    #[test]
    fn noisy_oracle_is_deterministic() {
        let tr = realize_trace(&flyby(), &EnvironmentParams::default(), 1).unwrap();
        let a = predict_noisy_oracle(&tr, 6.0, 77).unwrap();
        let b = predict_noisy_oracle(&tr, 6.0, 77).unwrap();
        let c = predict_noisy_oracle(&tr, 6.0, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(predict_noisy_oracle(&tr, -1.0, 0).is_err());
    }

    #[test]
    fn geometric_matches_noiseless_channel() {
        let env = noiseless_env();
        let plan = flyby();
        let tr = realize_trace(&plan, &env, 9).unwrap();
        let input =
            PredictorInput::new(vec![20.0], vec![[-300.0, 20.0, 100.0]], plan, None).unwrap();
        let p = predict_geometric(&input, &env).unwrap();
        assert_eq!(p.snr_hat_db, tr.snr_db());
        assert_eq!(p.len(), 10);
    }

    #[test]
    fn shadowing_forecast_decays_geometrically() {
        let env = EnvironmentParams {
            correlation: CorrelationMode::Fixed { rho: 0.9 },
            ..noiseless_env()
        };
        let plan = TrajectoryPlan::new([0.0; 3], vec![[0.0, 0.0, 100.0]; 4], 1.0).unwrap();
        let base = predict_geometric(
            &PredictorInput::new(vec![0.0], vec![[0.0, 0.0, 100.0]], plan.clone(), None).unwrap(),
            &env,
        )
        .unwrap();
        let shadowed = predict_geometric(
            &PredictorInput::new(vec![0.0], vec![[0.0, 0.0, 100.0]], plan, Some(8.0)).unwrap(),
            &env,
        )
        .unwrap();
        let expect = [7.2, 6.48, 5.832, 5.2488];
        for (k, e) in expect.iter().enumerate() {
            // Positive shadowing is extra loss, so the forecast SNR drops by it.
            let forecast_chi = base.snr_hat_db[k] - shadowed.snr_hat_db[k];
            assert!((forecast_chi - e).abs() < 1e-9, "slot {k}: {forecast_chi}");
        }
    }

    #[test]
    fn low_elevation_slot_predicts_nlos_outage() {
        let env = EnvironmentParams::default().with_link_budget_db(105.0);
        let plan = TrajectoryPlan::new([0.0; 3], vec![[0.0, 0.0, 100.0], [600.0, 0.0, 100.0]], 1.0)
            .unwrap();
        let p = predict_geometric(
            &PredictorInput::new(vec![0.0], vec![[0.0, 0.0, 100.0]], plan, None).unwrap(),
            &env,
        )
        .unwrap();
        assert!(p.usable_hat[0]);
        assert!(
            !p.usable_hat[1],
            "NLOS slot predicted at {} dB",
            p.snr_hat_db[1]
        );
    }

    #[test]
    fn input_requires_history() {
        assert!(PredictorInput::new(vec![], vec![], flyby(), None).is_err());
        assert!(PredictorInput::new(vec![1.0], vec![], flyby(), None).is_err());
    }
}
