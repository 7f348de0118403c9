use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{SensingError, TrackObservation};
use crate::road::LaneId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    /// Upstream, `[sector1_start, boundary)`.
    One,
    /// Downstream, `[boundary, sector2_end]`.
    Two,
}

/// Two adjacent stretches of an approach lane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorLayout {
    pub lane_id: LaneId,
    pub sector1_start: f64,
    pub boundary: f64,
    pub sector2_end: f64,
}

impl SectorLayout {
    pub fn new(lane_id: LaneId, sector1_start: f64, boundary: f64, sector2_end: f64) -> Result<Self, SensingError> {
        if !(sector1_start < boundary && boundary < sector2_end) {
            return Err(SensingError::InvalidLayout);
        }
        Ok(Self { lane_id, sector1_start, boundary, sector2_end })
    }

    /// Two sectors of `sector_length` metres, the downstream one ending at
    /// the stop line.
    pub fn at_stop_line(lane_id: LaneId, sector_length: f64) -> Result<Self, SensingError> {
        Self::new(lane_id, -2.0 * sector_length, -sector_length, 0.0)
    }
}

/// Which sector a sighting falls in. The boundary itself is sector two.
pub fn classify_sector(layout: &SectorLayout, obs: &TrackObservation) -> Option<Sector> {
    let x = obs.position;
    if x >= layout.sector1_start && x < layout.boundary {
        Some(Sector::One)
    } else if x >= layout.boundary && x <= layout.sector2_end {
        Some(Sector::Two)
    } else {
        None
    }
}

/// Per-lane counter.
///
/// A track is counted on its first sector-two sighting that follows a
/// sector-one sighting by at most one second of frames. Tracks are counted
/// at most once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterState {
    pub counted_ids: BTreeSet<u64>,
    /// track id -> last frame seen in sector one
    pub sector1_memory: BTreeMap<u64, u64>,
    pub count: u64,
    /// fps
    pub frame_rate: f64,
}

impl CounterState {
    pub fn new(frame_rate: f64) -> Self {
        assert!(frame_rate > 0.0, "frame rate must be positive");
        Self { counted_ids: BTreeSet::new(), sector1_memory: BTreeMap::new(), count: 0, frame_rate }
    }

    /// One second expressed in frames, rounded up.
    pub fn grace_frames(&self) -> u64 {
        (self.frame_rate * 1.0).ceil() as u64
    }

    /// Feeds one frame of sightings. Returns the tracks counted by it.
    pub fn update(&mut self, layout: &SectorLayout, observations: &[TrackObservation], frame_index: u64) -> Vec<u64> {
        let grace = self.grace_frames();
        self.sector1_memory
            .retain(|_, last| frame_index.saturating_sub(*last) <= grace);

        let mut newly = Vec::new();
        for obs in observations {
            debug_assert_eq!(obs.lane_id, layout.lane_id);
            match classify_sector(layout, obs) {
                Some(Sector::One) => {
                    self.sector1_memory.insert(obs.track_id, frame_index);
                }
                Some(Sector::Two) => {
                    if self.counted_ids.contains(&obs.track_id) {
                        continue;
                    }
                    let recent = self
                        .sector1_memory
                        .get(&obs.track_id)
                        .is_some_and(|&seen| frame_index.saturating_sub(seen) <= grace);
                    if recent {
                        self.sector1_memory.remove(&obs.track_id);
                        self.counted_ids.insert(obs.track_id);
                        self.count += 1;
                        newly.push(obs.track_id);
                    }
                }
                None => {}
            }
        }
        newly
    }
}
