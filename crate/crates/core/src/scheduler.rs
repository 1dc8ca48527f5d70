//! Per-slot sample budgets and structure-first block placement.

use serde::{Deserialize, Serialize};

use crate::predictor::PredictedTrace;
use crate::{Error, Result};

/// Regularizer in the proportional share denominator.
pub const ALLOCATION_EPSILON: f64 = 1e-9;

/// Reliability weight per slot: `log2(1 + snr_lin)` on predicted-usable
/// slots, zero elsewhere.
pub fn slot_weights(pred: &PredictedTrace, gamma_min_db: f64) -> Vec<f64> {
    pred.snr_hat_db
        .iter()
        .map(|&g| {
            if g >= gamma_min_db {
                (1.0 + 10f64.powf(g / 10.0)).log2()
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetAllocation {
    pub n: Vec<usize>,
    pub n_tot: usize,
}

impl BudgetAllocation {
    pub fn horizon(&self) -> usize {
        self.n.len()
    }
}

/// Real-valued proportional shares `n_tot * w_k / (sum w + eps)`.
pub fn proportional_shares(weights: &[f64], n_tot: usize) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| n_tot as f64 * w / (total + ALLOCATION_EPSILON))
        .collect()
}

/// Floors the proportional shares and hands the remainder, one sample each,
/// to the usable slots with the largest fractional parts (lowest index wins
/// ties).
pub fn allocate_budgets(weights: &[f64], n_tot: usize) -> Result<BudgetAllocation> {
    let usable: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
    if usable.is_empty() {
        return Err(Error::NoUsableSlots);
    }
    let shares = proportional_shares(weights, n_tot);
    let mut n: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = n.iter().sum();
    let mut remainder = n_tot - assigned;

    let mut order = usable;
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    // The remainder never exceeds the usable count in practice; cycling keeps
    // the sum exact for pathological weights anyway.
    while remainder > 0 {
        for &k in &order {
            if remainder == 0 {
                break;
            }
            n[k] += 1;
            remainder -= 1;
        }
    }
    Ok(BudgetAllocation { n, n_tot })
}

/// `floor(n_tot / K)` per slot with the remainder given to the earliest slots.
pub fn uniform_budgets(horizon: usize, n_tot: usize) -> Result<BudgetAllocation> {
    if horizon == 0 {
        return Err(Error::NoUsableSlots);
    }
    let base = n_tot / horizon;
    let extra = n_tot % horizon;
    let n = (0..horizon)
        .map(|k| base + usize::from(k < extra))
        .collect();
    Ok(BudgetAllocation { n, n_tot })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Structure,
    Texture,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Structure => "structure",
            BlockKind::Texture => "texture",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDescriptor {
    pub id: usize,
    pub kind: BlockKind,
    pub len: usize,
    /// `(row, col)` in the texture grid.
    pub grid_pos: Option<(usize, usize)>,
}

/// Descriptors for one structure block (id 0) and a `grid x grid` texture
/// grid, ids `1 + row * grid + col`.
pub fn block_descriptors(r_s: usize, r_t: usize, grid: usize) -> Vec<BlockDescriptor> {
    let mut blocks = vec![BlockDescriptor {
        id: 0,
        kind: BlockKind::Structure,
        len: r_s,
        grid_pos: None,
    }];
    for row in 0..grid {
        for col in 0..grid {
            blocks.push(BlockDescriptor {
                id: 1 + row * grid + col,
                kind: BlockKind::Texture,
                len: r_t,
                grid_pos: Some((row, col)),
            });
        }
    }
    blocks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotOrder {
    /// Decreasing predicted SNR, ties to the lower index.
    #[default]
    SnrDesc,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    /// `(block descriptor, slot)` in priority order; `None` is unscheduled.
    pub assignment: Vec<(BlockDescriptor, Option<usize>)>,
    pub per_slot_used: Vec<usize>,
}

impl BlockSchedule {
    pub fn slot_of(&self, id: usize) -> Option<usize> {
        self.assignment
            .iter()
            .find(|(b, _)| b.id == id)
            .and_then(|(_, s)| *s)
    }

    pub fn blocks_in_slot(&self, slot: usize) -> impl Iterator<Item = &BlockDescriptor> {
        self.assignment
            .iter()
            .filter(move |(_, s)| *s == Some(slot))
            .map(|(b, _)| b)
    }

    pub fn scheduled_samples(&self) -> usize {
        self.per_slot_used.iter().sum()
    }

    pub fn unscheduled(&self) -> impl Iterator<Item = &BlockDescriptor> {
        self.assignment
            .iter()
            .filter(|(_, s)| s.is_none())
            .map(|(b, _)| b)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "block_id,kind,r,slot")?;
        for (b, slot) in &self.assignment {
            match slot {
                Some(k) => writeln!(out, "{},{},{},{}", b.id, b.kind.as_str(), b.len, k)?,
                None => writeln!(out, "{},{},{},-", b.id, b.kind.as_str(), b.len)?,
            }
        }
        Ok(())
    }
}

/// Order in which slots are offered to blocks.
pub fn visit_order(pred: &PredictedTrace, order: SlotOrder) -> Vec<usize> {
    let mut slots: Vec<usize> = (0..pred.len()).collect();
    if order == SlotOrder::SnrDesc {
        slots.sort_by(|&a, &b| {
            pred.snr_hat_db[b]
                .total_cmp(&pred.snr_hat_db[a])
                .then(a.cmp(&b))
        });
    }
    slots
}

/// First-fit placement of blocks in priority order (structure, then textures
/// in row-major grid order) over the predicted-usable slots. Blocks never
/// split; a block that fits nowhere stays unscheduled.
pub fn schedule_blocks(
    blocks: &[BlockDescriptor],
    alloc: &BudgetAllocation,
    pred: &PredictedTrace,
    order: SlotOrder,
) -> BlockSchedule {
    let horizon = alloc.horizon();
    let mut priority: Vec<BlockDescriptor> = blocks.to_vec();
    priority.sort_by_key(|b| (b.kind, b.grid_pos, b.id));

    let slots: Vec<usize> = visit_order(pred, order)
        .into_iter()
        .filter(|&k| k < horizon && pred.usable_hat[k] && alloc.n[k] > 0)
        .collect();
    let mut remaining = alloc.n.clone();
    let mut per_slot_used = vec![0; horizon];

    let assignment = priority
        .into_iter()
        .map(|b| {
            let slot = slots.iter().copied().find(|&k| remaining[k] >= b.len);
            if let Some(k) = slot {
                remaining[k] -= b.len;
                per_slot_used[k] += b.len;
            }
            (b, slot)
        })
        .collect();

    BlockSchedule {
        assignment,
        per_slot_used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(snr: &[f64]) -> PredictedTrace {
        PredictedTrace::from_snr(snr.to_vec(), 5.0)
    }

    #[test]
    fn weight_values() {
        let w = slot_weights(
            &PredictedTrace::from_snr(vec![0.0, 20.0, 3.0], -10.0),
            -10.0,
        );
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - 101f64.log2()).abs() < 1e-12);
        assert!((w[1] - 6.658).abs() < 5e-4);
        assert_eq!(slot_weights(&pred(&[3.0]), 5.0), vec![0.0]);
    }

    #[test]
    fn worked_allocation() {
        let p = pred(&[10.0, 3.0, 20.0, 10.0]);
        let w = slot_weights(&p, 5.0);
        assert!((w[0] - 3.459).abs() < 1e-3 && w[1] == 0.0 && (w[2] - 6.658).abs() < 1e-3);
        let shares = proportional_shares(&w, 100);
        assert!((shares[0] - 25.48).abs() < 5e-3);
        assert!((shares[2] - 49.04).abs() < 5e-3);
        let a = allocate_budgets(&w, 100).unwrap();
        assert_eq!(a.n, vec![26, 0, 49, 25]);
    }

    #[test]
    fn single_and_symmetric_allocations() {
        let a = allocate_budgets(&[0.0, 2.5, 0.0], 512).unwrap();
        assert_eq!(a.n, vec![0, 512, 0]);
        let a = allocate_budgets(&[1.7; 8], 512).unwrap();
        assert_eq!(a.n, vec![64; 8]);
        assert!(matches!(
            allocate_budgets(&[0.0; 4], 10),
            Err(Error::NoUsableSlots)
        ));
        assert_eq!(allocate_budgets(&[1.0, 2.0], 0).unwrap().n, vec![0, 0]);
    }

    #[test]
    fn uniform_gives_remainder_to_earliest() {
        assert_eq!(
            uniform_budgets(10, 512).unwrap().n,
            vec![52, 52, 51, 51, 51, 51, 51, 51, 51, 51]
        );
    }

    #[test]
    fn worked_greedy_fill() {
        let blocks = block_descriptors(128, 24, 4);
        let alloc = BudgetAllocation {
            n: vec![150, 200, 162],
            n_tot: 512,
        };
        let p = pred(&[12.0, 25.0, 18.0]);
        let s = schedule_blocks(&blocks, &alloc, &p, SlotOrder::SnrDesc);
        assert_eq!(s.slot_of(0), Some(1));
        assert_eq!(s.blocks_in_slot(1).count(), 4);
        assert_eq!(s.blocks_in_slot(2).count(), 6);
        assert_eq!(s.blocks_in_slot(0).count(), 6);
        assert_eq!(s.per_slot_used, vec![144, 200, 144]);
        let missing: Vec<_> = s.unscheduled().map(|b| b.grid_pos).collect();
        assert_eq!(missing, vec![Some((3, 3))]);
    }

    #[test]
    fn oversized_structure_is_skipped() {
        let blocks = block_descriptors(128, 24, 4);
        let alloc = BudgetAllocation {
            n: vec![100, 100],
            n_tot: 200,
        };
        let s = schedule_blocks(&blocks, &alloc, &pred(&[10.0, 9.0]), SlotOrder::SnrDesc);
        assert_eq!(s.slot_of(0), None);
        assert_eq!(s.per_slot_used, vec![96, 96]);
        assert_eq!(s.unscheduled().count(), 1 + 8);
    }

    #[test]
    fn single_slot_takes_everything() {
        let blocks = block_descriptors(128, 24, 4);
        let alloc = BudgetAllocation {
            n: vec![0, 512, 0],
            n_tot: 512,
        };
        let s = schedule_blocks(
            &blocks,
            &alloc,
            &pred(&[1.0, 9.0, 2.0]),
            SlotOrder::Temporal,
        );
        assert_eq!(s.unscheduled().count(), 0);
        assert_eq!(s.per_slot_used, vec![0, 512, 0]);
    }

    #[test]
    fn predicted_outage_slots_get_nothing() {
        let blocks = block_descriptors(8, 4, 2);
        let alloc = BudgetAllocation {
            n: vec![30, 30],
            n_tot: 60,
        };
        let s = schedule_blocks(&blocks, &alloc, &pred(&[2.0, 9.0]), SlotOrder::Temporal);
        assert_eq!(s.per_slot_used[0], 0);
        assert!(s.blocks_in_slot(0).next().is_none());
    }

    #[test]
    fn temporal_order_fills_earliest_first() {
        let blocks = block_descriptors(10, 5, 2);
        let alloc = BudgetAllocation {
            n: vec![15, 15],
            n_tot: 30,
        };
        let s = schedule_blocks(&blocks, &alloc, &pred(&[6.0, 30.0]), SlotOrder::Temporal);
        assert_eq!(s.slot_of(0), Some(0));
        let s = schedule_blocks(&blocks, &alloc, &pred(&[6.0, 30.0]), SlotOrder::SnrDesc);
        assert_eq!(s.slot_of(0), Some(1));
    }

    #[test]
    fn schedule_csv() {
        let blocks = block_descriptors(3, 1, 1);
        let alloc = BudgetAllocation {
            n: vec![3],
            n_tot: 3,
        };
        let s = schedule_blocks(&blocks, &alloc, &pred(&[9.0]), SlotOrder::SnrDesc);
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "block_id,kind,r,slot\n0,structure,3,0\n1,texture,1,-\n"
        );
    }
}
