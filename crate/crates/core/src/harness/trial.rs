//! One image over one channel realization, for one method.

use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, Method};
use crate::channel::{realize_trace, ChannelTrace, EnvironmentParams, TrajectoryPlan, Vec3};
use crate::codec::{
    complete_missing, load_image, BlockSet, Codec, CompletionMode, ImageBuffer, StreamCodec,
};
use crate::metrics::{psnr, ssim};
use crate::phy::{
    assemble_reception, slot_noise_seed, transmit_slot, unit_power_scale, BlockOutcome, SlotPayload,
};
use crate::predictor::{
    predict_geometric, predict_noisy_oracle, PredictedTrace, PredictorInput, PredictorKind,
};
use crate::rng::{derive_seed, stream};
use crate::scheduler::{
    allocate_budgets, block_descriptors, schedule_blocks, slot_weights, uniform_budgets, BlockKind,
    BlockSchedule, BudgetAllocation,
};
use crate::{Error, Result};

/// Seed of trial `index`; shared by every method and grid point so that
/// comparisons are paired.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    derive_seed(base, stream::TRIAL, index as u64)
}

#[derive(Debug, Clone)]
pub struct PreparedImage {
    pub name: String,
    pub image: ImageBuffer,
    pub blocks: BlockSet,
    pub stream: Vec<f32>,
}

/// Codecs and encoded corpus, built once per run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub codec: Codec,
    pub stream_codec: StreamCodec,
    pub images: Vec<PreparedImage>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig, images: Vec<(String, ImageBuffer)>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::Config("image corpus is empty".into()));
        }
        let size = config.image_size;
        let codec =
            Codec::new(size, size, config.profile).map_err(|e| Error::Config(e.to_string()))?;
        let stream_codec =
            StreamCodec::new(size, size, config.n_tot).map_err(|e| Error::Config(e.to_string()))?;
        let images = images
            .into_iter()
            .map(|(name, image)| {
                let image = if (image.width(), image.height()) == (size, size) {
                    image
                } else {
                    image
                        .center_crop(size)
                        .map_err(|e| Error::Config(format!("{name}: {e}")))?
                };
                Ok(PreparedImage {
                    blocks: codec.encode(&image)?,
                    stream: stream_codec.encode(&image)?,
                    name,
                    image,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            codec,
            stream_codec,
            images,
        })
    }

    /// Loads every PNG/PPM in the configured corpus (a directory, sorted by
    /// file name, or a single file).
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        Self::new(config, load_corpus(&config.corpus)?)
    }

    pub fn image_for_trial(&self, trial: usize) -> &PreparedImage {
        &self.images[trial % self.images.len()]
    }
}

pub fn load_corpus(path: &Path) -> Result<Vec<(String, ImageBuffer)>> {
    let is_image = |p: &Path| {
        p.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
    };
    let files = if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| Error::Config(format!("corpus {}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| is_image(p))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    files
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let img = load_image(&p).map_err(|e| Error::Config(e.to_string()))?;
            Ok((name, img))
        })
        .collect()
}

/// Channel seen by one trial: the realized history preceding the horizon and
/// the horizon itself, both under the (possibly calibrated) link budget.
#[derive(Debug, Clone)]
pub struct TrialChannel {
    pub env: EnvironmentParams,
    pub history_positions: Vec<Vec3>,
    pub history: ChannelTrace,
    pub horizon: ChannelTrace,
}

/// Realizes history + horizon as one AR(1) chain. With a target, the link
/// budget is set so the horizon's mean realized SNR (dB) equals it.
pub fn realize_trial_channel(
    config: &ExperimentConfig,
    seed: u64,
    target_mean_snr_db: Option<f64>,
) -> Result<TrialChannel> {
    let history_positions = config.history_waypoints();
    let mut waypoints = history_positions.clone();
    waypoints.extend_from_slice(&config.trajectory.waypoints);
    let speeds = config.trajectory.speeds.as_ref().map(|v| {
        let mut all = vec![v[0]; history_positions.len()];
        all.extend_from_slice(v);
        all
    });
    let extended = TrajectoryPlan {
        ground_user: config.trajectory.ground_user,
        waypoints,
        slot_duration: config.trajectory.slot_duration,
        speeds,
    };
    let mut env = config.environment.clone();
    let mut full = realize_trace(&extended, &env, seed)?;
    if let Some(target) = target_mean_snr_db {
        let (_, horizon) = full.split_at(history_positions.len());
        let mean_loss =
            horizon.slots.iter().map(|s| s.total_loss_db).sum::<f64>() / horizon.len() as f64;
        let budget = target + mean_loss;
        if !budget.is_finite() {
            return Err(Error::Calibration(format!(
                "link budget for {target} dB is not finite"
            )));
        }
        if let Some(max) = config.max_link_budget_db {
            if budget > max {
                return Err(Error::Calibration(format!(
                    "mean SNR {target} dB needs a {budget:.2} dB link budget, above the {max} dB limit"
                )));
            }
        }
        env = env.with_link_budget_db(budget);
        full = full.with_link_budget_db(budget);
    }
    let (history, horizon) = full.split_at(history_positions.len());
    Ok(TrialChannel {
        env,
        history_positions,
        history,
        horizon,
    })
}

pub fn predict(
    config: &ExperimentConfig,
    channel: &TrialChannel,
    seed: u64,
    sigma_err_db: f64,
) -> Result<PredictedTrace> {
    match config.predictor {
        PredictorKind::NoisyOracle => predict_noisy_oracle(&channel.horizon, sigma_err_db, seed),
        PredictorKind::Geometric => {
            let input = PredictorInput::new(
                channel.history.snr_db(),
                channel.history_positions.clone(),
                config.trajectory.clone(),
                channel.history.slots.last().map(|s| s.shadowing_db),
            )?;
            predict_geometric(&input, &channel.env)
        }
    }
}

/// Budgets and schedule a method would use for a forecast. `Ok(None)` means
/// no slot is predicted usable.
pub fn plan_schedule(
    config: &ExperimentConfig,
    method: Method,
    pred: &PredictedTrace,
) -> Result<Option<(BudgetAllocation, BlockSchedule)>> {
    let blocks = block_descriptors(config.profile.r_s, config.profile.r_t, crate::codec::GRID);
    let (alloc, view) = match method {
        Method::UniformSched => (
            uniform_budgets(pred.len(), config.n_tot)?,
            pred.all_usable(),
        ),
        Method::Proposed | Method::NoGeneration => {
            match allocate_budgets(&slot_weights(pred, config.gamma_min_db), config.n_tot) {
                Ok(a) => (a, pred.clone()),
                Err(Error::NoUsableSlots) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Method::SingleStream => {
            return Err(Error::Config(
                "single_stream does not schedule blocks".into(),
            ));
        }
    };
    let schedule = schedule_blocks(&blocks, &alloc, &view, config.slot_order);
    Ok(Some((alloc, schedule)))
}

/// Per-trial result row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub method: Method,
    pub trial: usize,
    pub image: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub blocks_delivered: usize,
    pub blocks_erased: usize,
    pub blocks_unscheduled: usize,
    pub structure_lost: bool,
    /// No slot was predicted usable; nothing was sent.
    pub outage_trial: bool,
    pub samples_scheduled: usize,
    pub slot_budget: Vec<usize>,
    pub slot_used: Vec<usize>,
    pub mean_snr_db: f64,
    pub realized_outages: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialParams {
    pub target_mean_snr_db: Option<f64>,
    pub sigma_err_db: f64,
}

impl TrialParams {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            target_mean_snr_db: config.target_mean_snr_db,
            sigma_err_db: config.sigma_err_db,
        }
    }
}

/// Everything a trial produced, including the reconstruction.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub row: TrialRow,
    pub reconstruction: ImageBuffer,
}

pub fn run_trial(
    config: &ExperimentConfig,
    prepared: &Prepared,
    method: Method,
    trial: usize,
    params: TrialParams,
) -> Result<TrialOutput> {
    let seed = trial_seed(config.seed, trial);
    let img = prepared.image_for_trial(trial);
    let channel = realize_trial_channel(config, seed, params.target_mean_snr_db)?;
    let trace = &channel.horizon;
    let k = trace.len();

    let mut row = TrialRow {
        method,
        trial,
        image: img.name.clone(),
        psnr_db: 0.0,
        ssim: 0.0,
        blocks_delivered: 0,
        blocks_erased: 0,
        blocks_unscheduled: 0,
        structure_lost: false,
        outage_trial: false,
        samples_scheduled: 0,
        slot_budget: vec![0; k],
        slot_used: vec![0; k],
        mean_snr_db: trace.mean_snr_db(),
        realized_outages: trace.outage_count(),
    };

    let reconstruction = if method == Method::SingleStream {
        run_single_stream(config, prepared, img, trace, seed, &mut row)?
    } else {
        let pred = predict(config, &channel, seed, params.sigma_err_db)?;
        let completion = if method == Method::NoGeneration {
            CompletionMode::ZeroFill
        } else {
            CompletionMode::Conditional {
                gain: config.completion_gain,
            }
        };
        let rx = match plan_schedule(config, method, &pred)? {
            None => {
                row.outage_trial = true;
                row.blocks_unscheduled = 1 + crate::codec::TEXTURE_BLOCKS;
                crate::codec::ReceptionState::empty(config.profile.r_t)
            }
            Some((alloc, schedule)) => {
                let outcomes = transmit_schedule(config, &img.blocks, &schedule, trace, seed)?;
                row.slot_budget = alloc.n.clone();
                row.slot_used = schedule.per_slot_used.clone();
                row.samples_scheduled = schedule.scheduled_samples();
                row.blocks_unscheduled = schedule.unscheduled().count();
                row.blocks_delivered = outcomes.iter().filter(|o| o.delivered().is_some()).count();
                row.blocks_erased = outcomes.len() - row.blocks_delivered;
                assemble_reception(&schedule, &outcomes, config.profile.r_t)?
            }
        };
        row.structure_lost = rx.structure.is_none();
        prepared.codec.decode(&complete_missing(&rx, completion))
    };

    row.psnr_db = psnr(&img.image, &reconstruction);
    row.ssim = ssim(&img.image, &reconstruction);
    Ok(TrialOutput {
        row,
        reconstruction,
    })
}

/// Sends every scheduled block through its slot of the realized trace.
pub fn transmit_schedule(
    config: &ExperimentConfig,
    blocks: &BlockSet,
    schedule: &BlockSchedule,
    trace: &ChannelTrace,
    seed: u64,
) -> Result<Vec<BlockOutcome>> {
    let mut outcomes = Vec::new();
    for (k, slot) in trace.slots.iter().enumerate() {
        let mut payload = SlotPayload::new(k);
        for b in schedule.blocks_in_slot(k) {
            let samples = match (b.kind, b.grid_pos) {
                (BlockKind::Structure, _) => &blocks.structure,
                (BlockKind::Texture, Some((r, c))) => &blocks.textures[r * crate::codec::GRID + c],
                (BlockKind::Texture, None) => {
                    return Err(Error::Consistency(format!(
                        "texture block {} without grid position",
                        b.id
                    )))
                }
            };
            payload.push(b.id, samples);
        }
        if payload.boundaries.is_empty() {
            continue;
        }
        outcomes.extend(transmit_slot(
            &payload,
            slot.snr_db,
            config.gamma_min_db,
            slot_noise_seed(seed, k),
        )?);
    }
    Ok(outcomes)
}

/// Coefficient stream cut into equal consecutive chunks, one per slot, all
/// sharing one power-normalization scale. Erased chunks decode as zeros.
fn run_single_stream(
    config: &ExperimentConfig,
    prepared: &Prepared,
    img: &PreparedImage,
    trace: &ChannelTrace,
    seed: u64,
    row: &mut TrialRow,
) -> Result<ImageBuffer> {
    let alloc = uniform_budgets(trace.len(), config.n_tot)?;
    let scale = unit_power_scale(&img.stream);
    let mut received = vec![0.0f32; img.stream.len()];
    let mut start = 0;
    for (k, (&n, slot)) in alloc.n.iter().zip(&trace.slots).enumerate() {
        let end = (start + n).min(img.stream.len());
        let chunk = &img.stream[start..end];
        if !chunk.is_empty() {
            let mut payload = SlotPayload::new(k);
            payload.push_scaled(k, chunk, scale);
            let out = transmit_slot(
                &payload,
                slot.snr_db,
                config.gamma_min_db,
                slot_noise_seed(seed, k),
            )?;
            match out[0].delivered() {
                Some(v) => {
                    received[start..end].copy_from_slice(v);
                    row.blocks_delivered += 1;
                }
                None => row.blocks_erased += 1,
            }
        }
        row.slot_used[k] = chunk.len();
        start = end;
    }
    row.slot_budget = alloc.n;
    row.samples_scheduled = row.slot_used.iter().sum();
    Ok(prepared.stream_codec.decode(&received))
}
