use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SensingError, TrackObservation};
use crate::road::LaneId;

/// Anything a camera can look at.
pub trait ApproachScene {
    /// Every vehicle on `lane`, with its position relative to the stop line.
    fn approach_positions(&self, lane: LaneId) -> Vec<VehicleSighting>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleSighting {
    pub vehicle_id: u32,
    /// How many times the vehicle has passed this stop line before.
    pub pass: u32,
    /// m from the stop line, negative upstream
    pub position: f64,
}

impl VehicleSighting {
    /// Track identity a tracker would assign: stable during one approach,
    /// fresh on the next lap.
    pub fn track_id(&self) -> u64 {
        ((self.pass as u64) << 32) | self.vehicle_id as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualCameraConfig {
    pub lane_id: LaneId,
    /// Visible stretch `[from, to]`, m from the stop line.
    pub visible_window: (f64, f64),
    /// fps
    pub frame_rate: f64,
    /// Chance that any one sighting is missed.
    pub dropout_probability: f64,
    /// Chance per sighting that the tracker swaps the track to a new id.
    pub id_switch_probability: f64,
    pub rng_seed: u64,
}

impl VirtualCameraConfig {
    pub fn new(lane_id: LaneId, rng_seed: u64) -> Self {
        Self {
            lane_id,
            visible_window: (-40.0, 0.0),
            frame_rate: 5.0,
            dropout_probability: 0.0,
            id_switch_probability: 0.0,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        if !(self.frame_rate > 0.0) {
            return Err(SensingError::InvalidCamera("frame_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_probability) {
            return Err(SensingError::InvalidCamera("dropout_probability must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.id_switch_probability) {
            return Err(SensingError::InvalidCamera("id_switch_probability must be in [0, 1)"));
        }
        if !(self.visible_window.0 < self.visible_window.1) {
            return Err(SensingError::InvalidCamera("visible window is empty"));
        }
        Ok(())
    }
}

// Ids handed out after a switch; far above anything `track_id` produces.
const SWITCHED_ID_BASE: u64 = 1 << 62;

/// Stand-in for detection plus tracking on one approach lane.
#[derive(Debug, Clone)]
pub struct VirtualCamera {
    config: VirtualCameraConfig,
    rng: ChaCha8Rng,
    switched: BTreeMap<u64, u64>,
    next_switched: u64,
}

impl VirtualCamera {
    pub fn new(config: VirtualCameraConfig) -> Result<Self, SensingError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(config.lane_id.0 as u64);
        Ok(Self { config, rng, switched: BTreeMap::new(), next_switched: SWITCHED_ID_BASE })
    }

    pub fn config(&self) -> &VirtualCameraConfig {
        &self.config
    }

    /// Sightings of every vehicle inside the visible window, minus seeded
    /// dropouts. Output is sorted by position, downstream first.
    pub fn observe<S: ApproachScene + ?Sized>(&mut self, scene: &S, frame_index: u64) -> Vec<TrackObservation> {
        let (lo, hi) = self.config.visible_window;
        let mut visible: Vec<VehicleSighting> = scene
            .approach_positions(self.config.lane_id)
            .into_iter()
            .filter(|s| s.position >= lo && s.position <= hi)
            .collect();
        visible.sort_by(|a, b| b.position.total_cmp(&a.position).then(a.vehicle_id.cmp(&b.vehicle_id)));

        let mut out = Vec::with_capacity(visible.len());
        for s in visible {
            // Draw both numbers for every vehicle so the stream stays aligned
            // whatever the probabilities are.
            let drop_draw: f64 = self.rng.gen();
            let switch_draw: f64 = self.rng.gen();
            let base = s.track_id();
            if switch_draw < self.config.id_switch_probability {
                self.switched.insert(base, self.next_switched);
                self.next_switched += 1;
            }
            if drop_draw < self.config.dropout_probability {
                continue;
            }
            let track_id = self.switched.get(&base).copied().unwrap_or(base);
            out.push(TrackObservation {
                frame_index,
                track_id,
                lane_id: self.config.lane_id,
                position: s.position,
            });
        }
        out
    }
}
