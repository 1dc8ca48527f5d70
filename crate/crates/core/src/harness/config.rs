use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{EnvironmentParams, TrajectoryPlan, Vec3};
use crate::codec::CodecProfile;
use crate::predictor::PredictorKind;
use crate::scheduler::SlotOrder;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Predicted-SNR budgets, structure-first packing, conditional completion.
    Proposed,
    /// Equal budgets on every slot regardless of the forecast.
    UniformSched,
    /// Proposed scheduling with missing textures zero-filled.
    NoGeneration,
    /// One undivided coefficient stream spread evenly over all slots.
    SingleStream,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Proposed,
        Method::UniformSched,
        Method::NoGeneration,
        Method::SingleStream,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::UniformSched => "uniform_sched",
            Method::NoGeneration => "no_generation",
            Method::SingleStream => "single_stream",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_grid_db: Vec<f64>,
    pub mismatch_grid_db: Vec<f64>,
    pub mismatch_mean_snr_db: f64,
    pub methods: Vec<Method>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_grid_db: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            mismatch_grid_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            mismatch_mean_snr_db: 15.0,
            methods: Method::ALL.to_vec(),
        }
    }
}

/// Full experiment description, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub method: Method,
    pub predictor: PredictorKind,
    pub sigma_err_db: f64,
    pub n_tot: usize,
    pub gamma_min_db: f64,
    pub slot_order: SlotOrder,
    /// Per-trace mean realized SNR used by `simulate`, `schedule` and
    /// `channel-trace`; `None` keeps the configured link budget.
    pub target_mean_snr_db: Option<f64>,
    /// Calibration fails when the required `P_t / (N_0 B)` exceeds this.
    pub max_link_budget_db: Option<f64>,
    /// Realized slots preceding the horizon, fed to the predictor as history.
    pub history_slots: usize,
    pub completion_gain: f32,
    pub corpus: PathBuf,
    pub image_size: usize,
    pub profile: CodecProfile,
    pub environment: EnvironmentParams,
    pub trajectory: TrajectoryPlan,
    pub sweep: SweepConfig,
}

/// Straight pass at 100 m altitude: the first two and the last waypoint sit
/// below the 30 degree LOS threshold, the middle seven are LOS.
pub fn default_trajectory() -> TrajectoryPlan {
    TrajectoryPlan {
        ground_user: [0.0, 0.0, 0.0],
        waypoints: (0..10)
            .map(|k| [-250.0 + 50.0 * k as f64, 0.0, 100.0])
            .collect(),
        slot_duration: 1.0,
        speeds: None,
    }
}

pub fn bundled_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join("corpus")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            trials: 20,
            method: Method::Proposed,
            predictor: PredictorKind::NoisyOracle,
            sigma_err_db: 0.0,
            n_tot: 512,
            gamma_min_db: 5.0,
            slot_order: SlotOrder::SnrDesc,
            target_mean_snr_db: Some(15.0),
            max_link_budget_db: None,
            history_slots: 1,
            completion_gain: crate::codec::DEFAULT_COMPLETION_GAIN,
            corpus: bundled_corpus(),
            image_size: 256,
            profile: CodecProfile::default(),
            environment: EnvironmentParams::default(),
            trajectory: default_trajectory(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML; relative corpus paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.corpus.is_relative() {
            cfg.corpus = base_dir.join(&cfg.corpus);
        }
        cfg.finalize()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Copies shared keys into the environment and validates everything.
    pub fn finalize(&mut self) -> Result<()> {
        self.environment.snr_threshold_db = self.gamma_min_db;
        self.validate()
    }

    pub fn horizon(&self) -> usize {
        self.trajectory.horizon()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.environment.validate().map_err(cfg_err)?;
        self.trajectory.validate().map_err(cfg_err)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_tot == 0 {
            return Err(Error::Config("n_tot must be positive".into()));
        }
        if !(self.sigma_err_db >= 0.0) {
            return Err(Error::Config(format!(
                "sigma_err_db must be nonnegative, got {}",
                self.sigma_err_db
            )));
        }
        if !self.gamma_min_db.is_finite() {
            return Err(Error::Config("gamma_min_db must be finite".into()));
        }
        if !(self.completion_gain.is_finite() && self.completion_gain >= 0.0) {
            return Err(Error::Config(
                "completion_gain must be finite and nonnegative".into(),
            ));
        }
        if self.predictor == PredictorKind::Geometric && self.history_slots == 0 {
            return Err(Error::Config(
                "the geometric predictor needs history_slots >= 1".into(),
            ));
        }
        if self.profile.r_s == 0 || self.profile.r_t == 0 {
            return Err(Error::Config(
                "profile block lengths must be positive".into(),
            ));
        }
        if self.image_size == 0 || self.image_size % crate::codec::GRID != 0 {
            return Err(Error::Config(format!(
                "image_size {} must be a positive multiple of 4",
                self.image_size
            )));
        }
        if self.sweep.methods.is_empty() {
            return Err(Error::Config("sweep.methods must not be empty".into()));
        }
        if self
            .sweep
            .snr_grid_db
            .iter()
            .chain(&self.sweep.mismatch_grid_db)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("sweep grids must be finite".into()));
        }
        if self.sweep.mismatch_grid_db.iter().any(|&v| v < 0.0) {
            return Err(Error::Config(
                "mismatch grid values must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// History waypoints, extrapolated backwards at the initial velocity.
    pub fn history_waypoints(&self) -> Vec<Vec3> {
        let w = &self.trajectory.waypoints;
        let first = w[0];
        let step = if w.len() > 1 {
            [w[1][0] - first[0], w[1][1] - first[1], w[1][2] - first[2]]
        } else {
            [0.0; 3]
        };
        (1..=self.history_slots)
            .rev()
            .map(|m| {
                let m = m as f64;
                let z = first[2] - m * step[2];
                [
                    first[0] - m * step[0],
                    first[1] - m * step[1],
                    if z > 0.0 { z } else { first[2] },
                ]
            })
            .collect()
    }
}
