//! Analog block transmission over the realized slot channel.
//!
//! The multiplicative gain is folded into an effective SNR: after coherent
//! compensation with perfect gain knowledge, `y = g s + n` is equivalent to
//! `s + w` with `w ~ N(0, 1 / snr)` for unit-power `s`. Each block is scaled
//! to unit average power; the scale travels as noiseless side information.
//! A slot whose realized SNR is below the threshold carries nothing: every
//! block in it is erased.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::codec::{ReceptionState, GRID, TEXTURE_BLOCKS};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::scheduler::{BlockKind, BlockSchedule};
use crate::{Error, Result};

/// Root-mean-square amplitude used to normalize a block; 1 for all-zero blocks.
pub fn unit_power_scale(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let power = samples.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>() / samples.len() as f64;
    if power > 0.0 {
        power.sqrt()
    } else {
        1.0
    }
}

/// Symbols of the blocks placed in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotPayload {
    pub slot: usize,
    pub symbols: Vec<f32>,
    /// `(block id, start, end)` partitioning `symbols`.
    pub boundaries: Vec<(usize, usize, usize)>,
    pub scales: Vec<f64>,
}

impl SlotPayload {
    pub fn new(slot: usize) -> Self {
        Self {
            slot,
            symbols: Vec::new(),
            boundaries: Vec::new(),
            scales: Vec::new(),
        }
    }

    /// Appends a block normalized by its own RMS amplitude.
    pub fn push(&mut self, id: usize, samples: &[f32]) {
        self.push_scaled(id, samples, unit_power_scale(samples));
    }

    /// Appends a block with an externally chosen scale (e.g. one scale shared
    /// by a whole stream).
    pub fn push_scaled(&mut self, id: usize, samples: &[f32], scale: f64) {
        let start = self.symbols.len();
        self.symbols.extend_from_slice(samples);
        self.boundaries.push((id, start, self.symbols.len()));
        self.scales.push(scale);
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockStatus {
    Delivered(Vec<f32>),
    Erased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub id: usize,
    pub slot: usize,
    pub status: BlockStatus,
    pub snr_db: f64,
}

impl BlockOutcome {
    pub fn delivered(&self) -> Option<&[f32]> {
        match &self.status {
            BlockStatus::Delivered(v) => Some(v),
            BlockStatus::Erased => None,
        }
    }
}

/// Per-slot noise seed, independent of slot processing order.
pub fn slot_noise_seed(trial_seed: u64, slot: usize) -> u64 {
    derive_seed(trial_seed, stream::PHY, slot as u64)
}

/// Sends one slot. Noise for the payload is drawn in symbol order from a
/// generator seeded with `seed`.
pub fn transmit_slot(
    payload: &SlotPayload,
    snr_db: f64,
    gamma_min_db: f64,
    seed: u64,
) -> Result<Vec<BlockOutcome>> {
    let snr_linear = 10f64.powf(snr_db / 10.0);
    if !(snr_linear > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slot SNR must be positive, got {snr_db} dB"
        )));
    }
    if snr_db < gamma_min_db {
        return Ok(payload
            .boundaries
            .iter()
            .map(|&(id, _, _)| BlockOutcome {
                id,
                slot: payload.slot,
                status: BlockStatus::Erased,
                snr_db,
            })
            .collect());
    }
    let noise_std = (1.0 / snr_linear).sqrt();
    let mut rng = rng_from_seed(seed);
    Ok(payload
        .boundaries
        .iter()
        .zip(&payload.scales)
        .map(|(&(id, start, end), &scale)| {
            let received = payload.symbols[start..end]
                .iter()
                .map(|&s| {
                    let w: f64 = rng.sample(StandardNormal);
                    ((f64::from(s) / scale + noise_std * w) * scale) as f32
                })
                .collect();
            BlockOutcome {
                id,
                slot: payload.slot,
                status: BlockStatus::Delivered(received),
                snr_db,
            }
        })
        .collect())
}

/// Places delivered blocks into a reception state; erased and unscheduled
/// blocks stay missing.
pub fn assemble_reception(
    schedule: &BlockSchedule,
    outcomes: &[BlockOutcome],
    texture_len: usize,
) -> Result<ReceptionState> {
    let mut rx = ReceptionState::empty(texture_len);
    let mut seen = vec![false; schedule.assignment.len()];
    for outcome in outcomes {
        let index = schedule
            .assignment
            .iter()
            .position(|(b, _)| b.id == outcome.id)
            .ok_or_else(|| {
                Error::Consistency(format!("outcome for unknown block {}", outcome.id))
            })?;
        if std::mem::replace(&mut seen[index], true) {
            return Err(Error::Consistency(format!(
                "block {} placed twice",
                outcome.id
            )));
        }
        let (block, slot) = &schedule.assignment[index];
        if *slot != Some(outcome.slot) {
            return Err(Error::Consistency(format!(
                "block {} arrived in slot {} but was scheduled in {:?}",
                block.id, outcome.slot, slot
            )));
        }
        let Some(samples) = outcome.delivered() else {
            continue;
        };
        match (block.kind, block.grid_pos) {
            (BlockKind::Structure, _) => rx.structure = Some(samples.to_vec()),
            (BlockKind::Texture, Some((row, col))) if row < GRID && col < GRID => {
                rx.textures[row * GRID + col] = Some(samples.to_vec());
            }
            (BlockKind::Texture, pos) => {
                return Err(Error::Consistency(format!(
                    "texture block {} has invalid position {pos:?}",
                    block.id
                )))
            }
        }
    }
    debug_assert_eq!(rx.textures.len(), TEXTURE_BLOCKS);
    Ok(rx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::PredictedTrace;
    use crate::scheduler::{block_descriptors, schedule_blocks, BudgetAllocation, SlotOrder};

    fn payload(samples: &[f32]) -> SlotPayload {
        let mut p = SlotPayload::new(0);
        p.push(7, samples);
        p
    }

    #[test]
    fn infinite_snr_is_noiseless() {
        let s: Vec<f32> = (0..100).map(|i| (i as f32 * 0.37).sin() * 3.0).collect();
        let out = transmit_slot(&payload(&s), f64::INFINITY, 5.0, 1).unwrap();
        assert_eq!(out[0].delivered().unwrap(), s.as_slice());
    }

    #[test]
    fn below_threshold_erases_everything() {
        let mut p = payload(&[1.0; 4]);
        p.push(8, &[2.0; 4]);
        let out = transmit_slot(&p, 4.9, 5.0, 3).unwrap();
        assert!(out.iter().all(|o| o.status == BlockStatus::Erased));
        let out = transmit_slot(&p, 5.0, 5.0, 3).unwrap();
        assert!(out.iter().all(|o| o.delivered().is_some()));
    }

    #[test]
    fn zero_block_scale_is_one() {
        assert_eq!(unit_power_scale(&[0.0; 5]), 1.0);
        assert!((unit_power_scale(&[3.0, -3.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let s = vec![0.5f32; 64];
        let a = transmit_slot(&payload(&s), 10.0, 5.0, 42).unwrap();
        let b = transmit_slot(&payload(&s), 10.0, 5.0, 42).unwrap();
        let c = transmit_slot(&payload(&s), 10.0, 5.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn nonpositive_snr_is_a_domain_error() {
        assert!(transmit_slot(&payload(&[1.0]), f64::NEG_INFINITY, 5.0, 0).is_err());
        assert!(transmit_slot(&payload(&[1.0]), f64::NAN, 5.0, 0).is_err());
    }

    fn worked_schedule() -> BlockSchedule {
        let blocks = block_descriptors(128, 24, 4);
        let alloc = BudgetAllocation {
            n: vec![200, 162, 150],
            n_tot: 512,
        };
        schedule_blocks(
            &blocks,
            &alloc,
            &PredictedTrace::from_snr(vec![25.0, 18.0, 12.0], 5.0),
            SlotOrder::SnrDesc,
        )
    }

    fn send_all(schedule: &BlockSchedule, snr: &[f64]) -> Vec<BlockOutcome> {
        let mut out = Vec::new();
        for (k, &g) in snr.iter().enumerate() {
            let mut p = SlotPayload::new(k);
            for b in schedule.blocks_in_slot(k) {
                p.push(b.id, &vec![1.0; b.len]);
            }
            out.extend(transmit_slot(&p, g, 5.0, k as u64).unwrap());
        }
        out
    }

    #[test]
    fn assembly_marks_erased_and_unscheduled_missing() {
        let s = worked_schedule();
        let rx = assemble_reception(&s, &send_all(&s, &[25.0, 18.0, 12.0]), 24).unwrap();
        // Only the unscheduled texture (3,3) is missing.
        assert_eq!(rx.missing_count(), 1);
        assert!(rx.textures[15].is_none());

        // Outage on the slot carrying structure + three textures.
        let rx = assemble_reception(&s, &send_all(&s, &[2.0, 18.0, 12.0]), 24).unwrap();
        assert!(rx.structure.is_none());
        assert_eq!(rx.missing_count(), 4 + 1);
        assert!(rx.textures[..3].iter().all(Option::is_none));
    }

    #[test]
    fn single_erasure_is_local() {
        let blocks = block_descriptors(4, 2, 4);
        let alloc = BudgetAllocation {
            n: vec![100],
            n_tot: 100,
        };
        let s = schedule_blocks(
            &blocks,
            &alloc,
            &PredictedTrace::from_snr(vec![30.0], 5.0),
            SlotOrder::SnrDesc,
        );
        let mut outcomes = send_all(&s, &[30.0]);
        let tex_2_3 = 1 + 2 * 4 + 3;
        outcomes
            .iter_mut()
            .find(|o| o.id == tex_2_3)
            .unwrap()
            .status = BlockStatus::Erased;
        let rx = assemble_reception(&s, &outcomes, 2).unwrap();
        assert_eq!(rx.missing_count(), 1);
        assert!(rx.textures[2 * 4 + 3].is_none());
    }

    #[test]
    fn duplicate_outcome_is_rejected() {
        let s = worked_schedule();
        let mut outcomes = send_all(&s, &[25.0, 18.0, 12.0]);
        outcomes.push(outcomes[0].clone());
        assert!(matches!(
            assemble_reception(&s, &outcomes, 24),
            Err(Error::Consistency(_))
        ));
    }
}
