//! Virtual camera and the two-sector vehicle counter.
//!
//! Positions are signed metres along an approach lane measured from the stop
//! line, negative upstream. A vehicle is counted when a sighting in the
//! upstream sector is followed by one in the downstream sector.

mod camera;
mod counter;
mod track_file;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::{LaneId, Road};

pub use camera::{ApproachScene, VehicleSighting, VirtualCamera, VirtualCameraConfig};
pub use counter::{classify_sector, CounterState, Sector, SectorLayout};
pub use track_file::{read_tracks, write_tracks, TRACK_HEADER};

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("measurement window is empty ({start_time} s to {end_time} s)")]
    EmptyWindow { start_time: f64, end_time: f64 },
    #[error("invalid sector layout: need sector1_start < boundary < sector2_end")]
    InvalidLayout,
    #[error("invalid camera config: {0}")]
    InvalidCamera(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One per-frame sighting of one tracked vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackObservation {
    pub frame_index: u64,
    pub track_id: u64,
    pub lane_id: LaneId,
    /// m from the stop line, negative upstream
    pub position: f64,
}

/// Vehicles counted on one lane between a road's amber onset and the end of
/// its next green.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementWindow {
    pub road: Road,
    pub lane: LaneId,
    /// s
    pub start_time: f64,
    /// s
    pub end_time: f64,
    pub vehicle_count: u64,
}

impl MeasurementWindow {
    pub const CSV_HEADER: &'static str = "road,lane,start_time_s,end_time_s,vehicle_count,flow_vps";

    /// Vehicles per second over the window.
    pub fn realtime_flow(&self) -> Result<f64, SensingError> {
        realtime_flow(self.vehicle_count, self.start_time, self.end_time)
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.road,
            self.lane,
            self.start_time,
            self.end_time,
            self.vehicle_count,
            self.realtime_flow().unwrap_or(0.0)
        )
    }
}

/// `count / (end - start)` in veh/s.
pub fn realtime_flow(vehicle_count: u64, start_time: f64, end_time: f64) -> Result<f64, SensingError> {
    if !(end_time > start_time) {
        return Err(SensingError::EmptyWindow { start_time, end_time });
    }
    Ok(vehicle_count as f64 / (end_time - start_time))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(count: u64, start: f64, end: f64) -> MeasurementWindow {
        MeasurementWindow { road: Road::A, lane: LaneId(0), start_time: start, end_time: end, vehicle_count: count }
    }

    #[test]
    fn flow_over_window() {
        assert_eq!(window(30, 0.0, 60.0).realtime_flow().unwrap(), 0.5);
        assert_eq!(window(0, 10.0, 70.0).realtime_flow().unwrap(), 0.0);
        let q = window(9, 100.0, 162.7).realtime_flow().unwrap();
        assert!((q - 0.1435).abs() < 1e-4);
        assert!(matches!(window(3, 5.0, 5.0).realtime_flow(), Err(SensingError::EmptyWindow { .. })));
    }
}
