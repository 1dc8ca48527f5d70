//! Predictive structure/texture image transmission over a time-slotted UAV
//! downlink.
//!
//! The pipeline is split into six layers that mirror the link:
//!
//! - [`channel`]: air-to-ground geometry, LOS/NLOS state, path loss, AR(1)
//!   shadowing and per-slot SNR/usability.
//! - [`predictor`]: forecasts of the per-slot SNR over the horizon.
//! - [`scheduler`]: per-slot sample budgets and structure-first block packing.
//! - [`codec`]: a deterministic transform codec with one global structure
//!   block and a 4x4 grid of texture blocks, plus receiver-side completion.
//! - [`phy`]: analog block transmission with AWGN and outage erasure.
//! - [`harness`]: trials, baselines, sweeps, metrics and reports.

pub mod channel;
pub mod codec;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod phy;
pub mod predictor;
pub mod rng;
pub mod scheduler;

pub use error::{Error, Result};
