//! Signal timing: Webster green splits and the two-road phase machine.

mod phase;
mod signal;
mod webster;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow_model::FlowModelError;

pub use phase::{Indication, KeepSchedule, Phase, PhaseState, Schedule, ScheduleProvider, SignalEvent};
pub use signal::{ScheduleRecord, SignalController};
pub use webster::{fixed_time_schedule, flow_ratio, road_flow, webster_schedule, WebsterComputation};

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("maximum flow must be positive, got {0}")]
    ZeroCapacity(f64),
    #[error("both roads report zero flow")]
    BothZero,
    #[error("flow ratio must be finite and non-negative, got {0}")]
    InvalidRatio(f64),
    #[error("road length must be positive, got {0} m")]
    InvalidLength(f64),
    #[error(transparent)]
    FlowModel(#[from] FlowModelError),
}

/// Fixed intervals and guard rails around the computed greens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalTiming {
    /// s
    pub amber: f64,
    /// s
    pub all_red: f64,
    /// Floor applied to each computed green, s.
    pub min_green: f64,
    /// Cap on the ideal cycle before it is split, s.
    pub max_cycle: f64,
    pub phase_count: u32,
}

impl Default for SignalTiming {
    fn default() -> Self {
        Self { amber: 4.0, all_red: 2.0, min_green: 5.0, max_cycle: 120.0, phase_count: 2 }
    }
}

impl SignalTiming {
    /// Time per cycle in which no road is served.
    pub fn lost_time(&self) -> f64 {
        self.phase_count as f64 * (self.amber + self.all_red)
    }

    /// Non-green time between one road's green ending and the other's starting.
    pub fn clearance(&self) -> f64 {
        self.amber + self.all_red
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    Fixed,
    Adaptive,
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlMode::Fixed => "fixed",
            ControlMode::Adaptive => "adaptive",
        })
    }
}

impl FromStr for ControlMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "fixed" => Ok(ControlMode::Fixed),
            "adaptive" => Ok(ControlMode::Adaptive),
            other => Err(format!("unknown controller mode `{other}` (expected fixed|adaptive)")),
        }
    }
}
