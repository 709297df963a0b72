//! Deterministic simulator and bound checker for distributed sweep coverage
//! of irregular regions by a line of mobile agents.
//!
//! A team of `n` agents splits a region between two lateral boundary curves
//! into vertical-slice subregions by dragging virtual partition bars upward
//! at constant speed while a nearest-neighbour feedback balances the
//! workload allocated to each agent. Agents simultaneously remove workload
//! at a fixed rate until the whole region is clean. The crate integrates the
//! bar dynamics, accounts for the workload memory frozen into the bar
//! traces, and evaluates the proved performance bounds (completion-time
//! error, collision-avoidance spacing, decay envelope on the balance
//! energy) against every simulated trajectory.

pub mod analysis;
pub mod cli;
pub mod expr;
pub mod partition;
pub mod region;
pub mod sweep;

pub use analysis::{BoundReport, SpectralConstants, VerdictReport};
pub use partition::{MassMode, PartitionConfig, PartitionHistory, PartitionState};
pub use region::{BoundaryCurve, DensityField, RegionSpec, Trace};
pub use sweep::{SweepConfig, SweepOutcome};
