//! Simulator, estimators and power-allocation optimizer for channel
//! estimation in an active-IRS-aided single-antenna uplink.
//!
//! The pipeline is:
//!
//! 1. [`system`] draws Rayleigh channels under a log-distance path-loss law
//!    and computes the IRS amplification factor from the power split.
//! 2. [`pilot`] sends four sign-patterned pilot blocks and combines them so
//!    that the direct and cascaded channels appear in separate observations.
//! 3. [`estimators`] recovers both channels by least squares and optionally
//!    shrinks them with linear MMSE weights.
//! 4. [`mse`] evaluates the closed-form estimation errors and packs them into
//!    rational objectives of the power-allocation factor or IRS power.
//! 5. [`optimize`] minimizes those objectives exactly (quartic / square root)
//!    with a grid-search fallback, using the root finders in [`poly`].
//!
//! [`harness`] and [`dataset`] drive Monte Carlo sweeps and export training
//! data for learned estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod complexity;
pub mod config;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod mse;
pub mod optimize;
pub mod pilot;
pub mod poly;
pub mod rng;
pub mod system;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use estimators::{CascadedEstimate, DirectEstimate, Method, MmseWeights, NoiseLoading};
pub use linalg::{CMat, CVec, C64};
pub use mse::{BetaObjective, ChannelNorms, MseBreakdown, PirsObjective};
pub use optimize::{OptResult, OptStatus};
pub use pilot::{PilotSchedule, ReceivedFrame, TransmitOptions};
pub use poly::{CubicSolution, QuarticSolution};
pub use system::{ChannelRealization, IrsGain};
