//! Fixed-step simulation of two ring roads sharing one signalized crossing.
//!
//! Each ring carries two directional lanes. Every lane is an independent
//! closed loop that passes the stop line once per lap; the second crossing
//! of the rings is grade separated and plays no part. Vehicles never change
//! lanes or overtake, so the order within a lane is fixed for the whole run.

mod run;
mod scenario;
mod trace;
mod world;

use thiserror::Error;

use crate::road::LaneId;

pub use run::{run, RunOutput};
pub use scenario::{DriverParams, ScenarioConfig, EQUAL_FLOW_GRID, SPLIT_FLOW_GRID};
pub use trace::SpeedTrace;
pub use world::{
    desired_speed, initial_schedule, proceeds_on_amber, schedule_from_greens, Lane, SafetyStats, SignalView,
    StepOutput, Vehicle, World,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("scenario line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("lane {lane}: {vehicles} vehicles do not fit on {length} m")]
    Overcapacity { lane: LaneId, vehicles: usize, length: f64 },
    #[error("collision on lane {lane}: vehicle {vehicle} gap {gap:.3} m at t = {time:.1} s")]
    Collision { lane: LaneId, vehicle: u32, gap: f64, time: f64 },
    #[error("vehicle crossed the stop line on red at t = {time:.1} s")]
    RedLightCrossing { time: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Invariant breaches as opposed to bad input.
    pub fn is_runtime_breach(&self) -> bool {
        matches!(self, SimError::Collision { .. } | SimError::RedLightCrossing { .. })
    }
}
