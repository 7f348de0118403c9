use serde::{Deserialize, Serialize};

use super::world::{SafetyStats, World};
use super::{ScenarioConfig, SimError, SpeedTrace};
use crate::controller::ScheduleRecord;
use crate::sensing::MeasurementWindow;

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub steps: u64,
    pub trace: SpeedTrace,
    pub schedule_log: Vec<ScheduleRecord>,
    pub windows: Vec<MeasurementWindow>,
    /// Counter totals per lane.
    pub lane_counts: [u64; 4],
    /// Actual sector-boundary crossings per lane.
    pub true_crossings: [u64; 4],
    pub safety: SafetyStats,
}

impl RunOutput {
    /// Simulated time, s.
    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }
}

/// Builds the world and steps it `duration / dt` times.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput, SimError> {
    let mut world = World::new(config)?;
    let steps = config.steps();
    for _ in 0..steps {
        world.step()?;
    }
    let (config, signal, trace, safety, lane_counts, true_crossings) = world.into_parts();
    let (schedule_log, windows) = signal.into_logs();
    Ok(RunOutput { config, steps, trace, schedule_log, windows, lane_counts, true_crossings, safety })
}
