//! Slot-level simulator for adaptive split learning over an
//! energy-constrained wireless edge network.
//!
//! Devices train a layered model one after another. In every slot the
//! scheduler picks a split point and a share of the edge server's compute
//! to minimise `V * delay + Q * energy`, where `Q` is a virtual queue that
//! tracks energy spent above a per-slot budget.

pub mod channel;
pub mod config;
pub mod cost;
pub mod error;
pub mod lyapunov;
pub mod profile;
pub mod sim;
pub mod solver;
pub mod trace;

pub use channel::{ChannelDraw, GainMode, LinkRates, RadioLink};
pub use config::ExperimentConfig;
pub use cost::{CostBreakdown, CostModel, Decision, DeviceSpec, ServerSpec};
pub use error::{Error, Result};
pub use lyapunov::{PenaltyConfig, QueueState};
pub use profile::{LayerEntry, ModelProfile};
pub use sim::{Population, RunConfig, RunOutput, RunSummary, SlotRecord};
pub use solver::{BaselineParams, SchedulerKind, SlotContext, SolverResult};
