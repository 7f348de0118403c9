use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::controller::{ControlMode, SignalTiming};
use crate::flow_model::FlowModelParams;

/// Driver and vehicle constants shared by every vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    /// m
    pub vehicle_length: f64,
    /// m/s²
    pub accel: f64,
    /// Deceleration used for planned stops, m/s².
    pub comfortable_decel: f64,
    /// Hard limit on any deceleration, m/s².
    pub emergency_decel: f64,
    /// Standstill clearance required at placement, m.
    pub min_gap: f64,
    /// Vehicles stop this far short of the stop line, m.
    pub stop_buffer: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            vehicle_length: 4.643,
            accel: 2.5,
            comfortable_decel: 3.0,
            emergency_decel: 6.0,
            min_gap: 2.0,
            stop_buffer: 1.0,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub label: String,
    /// Vehicles on the left ring (road A) and right ring (road B).
    pub left_vehicles: usize,
    pub right_vehicles: usize,
    /// Clockwise-lane share of each ring; `None` splits evenly with the odd
    /// vehicle clockwise.
    pub left_clockwise: Option<usize>,
    pub right_clockwise: Option<usize>,
    /// m
    pub left_length: f64,
    /// m
    pub right_length: f64,
    pub mode: ControlMode,
    pub flow_model: FlowModelParams,
    pub timing: SignalTiming,
    /// km/h
    pub speed_limit: f64,
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
    pub seed: u64,
    /// fps
    pub frame_rate: f64,
    pub dropout_probability: f64,
    pub id_switch_probability: f64,
    /// Length of each counting sector, m.
    pub sector_length: f64,
    /// How far upstream of the stop line the cameras see, m.
    pub camera_range: f64,
    /// Explicit first-cycle greens; otherwise derived from the vehicle counts.
    pub fixed_green_a: Option<f64>,
    pub fixed_green_b: Option<f64>,
    pub driver: DriverParams,
    /// Length past the stop line in which vehicles are committed, m.
    pub conflict_zone: f64,
    /// s
    pub record_interval: f64,
    /// Loop travel time used by the time-lost metrics, min.
    pub cycle_time_min: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            label: "default".into(),
            left_vehicles: 35,
            right_vehicles: 37,
            left_clockwise: None,
            right_clockwise: None,
            left_length: 3040.0,
            right_length: 3200.0,
            mode: ControlMode::Fixed,
            flow_model: FlowModelParams::default(),
            timing: SignalTiming::default(),
            speed_limit: 60.0,
            duration: 900.0,
            dt: 0.1,
            seed: 1,
            frame_rate: 5.0,
            dropout_probability: 0.05,
            id_switch_probability: 0.0,
            sector_length: 15.0,
            camera_range: 40.0,
            fixed_green_a: None,
            fixed_green_b: None,
            driver: DriverParams::default(),
            conflict_zone: 15.0,
            record_interval: 0.1,
            cycle_time_min: 3.0,
        }
    }
}

/// Equal-flow grid: (flow label veh/s, left, right, reference greens A/B).
pub const EQUAL_FLOW_GRID: [(&str, usize, usize, f64, f64); 4] = [
    ("0.100", 22, 24, 13.7, 14.1),
    ("0.125", 30, 30, 19.3, 18.4),
    ("0.150", 35, 37, 25.3, 25.4),
    ("0.175", 42, 45, 38.8, 39.4),
];

/// Major/minor grid: (ratio label, left, right, reference greens A/B).
pub const SPLIT_FLOW_GRID: [(&str, usize, usize, f64, f64); 4] = [
    ("50/50", 35, 37, 25.3, 25.4),
    ("60/40", 44, 30, 31.6, 21.6),
    ("70/30", 53, 22, 36.9, 16.3),
    ("80/20", 63, 14, 42.1, 10.6),
];

impl ScenarioConfig {
    fn from_grid(prefix: &str, row: (&str, usize, usize, f64, f64)) -> Self {
        let (label, left, right, ga, gb) = row;
        Self {
            label: format!("{prefix} {label}"),
            left_vehicles: left,
            right_vehicles: right,
            fixed_green_a: Some(ga),
            fixed_green_b: Some(gb),
            ..Self::default()
        }
    }

    /// The four equal-flow scenarios with their reference baseline greens.
    pub fn equal_flow_grid() -> Vec<Self> {
        EQUAL_FLOW_GRID.iter().map(|&r| Self::from_grid("flow", r)).collect()
    }

    /// The four major/minor scenarios with their reference baseline greens.
    pub fn split_flow_grid() -> Vec<Self> {
        SPLIT_FLOW_GRID.iter().map(|&r| Self::from_grid("ratio", r)).collect()
    }

    /// Vehicles per lane, lanes in `LaneId` order.
    pub fn lane_populations(&self) -> [usize; 4] {
        let split = |n: usize, cw: Option<usize>| {
            let cw = cw.unwrap_or(n.div_ceil(2));
            [cw, n.saturating_sub(cw)]
        };
        let [a0, a1] = split(self.left_vehicles, self.left_clockwise);
        let [b0, b1] = split(self.right_vehicles, self.right_clockwise);
        [a0, a1, b0, b1]
    }

    pub fn lane_lengths(&self) -> [f64; 4] {
        [self.left_length, self.left_length, self.right_length, self.right_length]
    }

    /// m/s
    pub fn speed_limit_mps(&self) -> f64 {
        self.speed_limit / 3.6
    }

    pub fn steps(&self) -> u64 {
        (self.duration / self.dt + 1e-9).floor() as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if let Some(cw) = self.left_clockwise {
            if cw > self.left_vehicles {
                return bad(format!("left_clockwise {cw} exceeds left_vehicles {}", self.left_vehicles));
            }
        }
        if let Some(cw) = self.right_clockwise {
            if cw > self.right_vehicles {
                return bad(format!("right_clockwise {cw} exceeds right_vehicles {}", self.right_vehicles));
            }
        }
        let positive = [
            ("left_length_m", self.left_length),
            ("right_length_m", self.right_length),
            ("speed_limit_kph", self.speed_limit),
            ("dt_s", self.dt),
            ("frame_rate_fps", self.frame_rate),
            ("sector_length_m", self.sector_length),
            ("record_interval_s", self.record_interval),
            ("cycle_time_min", self.cycle_time_min),
            ("vehicle_length_m", self.driver.vehicle_length),
            ("accel_mps2", self.driver.accel),
            ("comfortable_decel_mps2", self.driver.comfortable_decel),
            ("emergency_decel_mps2", self.driver.emergency_decel),
            ("amber_s", self.timing.amber),
            ("max_cycle_s", self.timing.max_cycle),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        if !(self.duration >= 0.0) {
            return bad("duration_s must be non-negative".into());
        }
        if self.timing.all_red < 0.0 || self.timing.min_green < 0.0 || self.driver.min_gap < 0.0 {
            return bad("all_red_s, min_green_s and min_gap_m must be non-negative".into());
        }
        if self.camera_range < 2.0 * self.sector_length {
            return bad("camera_range_m must cover both counting sectors".into());
        }
        let ratio = |x: f64| (x - x.round()).abs() < 1e-6 && x.round() >= 1.0;
        if !ratio(1.0 / (self.frame_rate * self.dt)) {
            return bad("1 / (frame_rate_fps * dt_s) must be a whole number of steps".into());
        }
        if !ratio(self.record_interval / self.dt) {
            return bad("record_interval_s must be a whole number of steps".into());
        }
        if !(0.0..1.0).contains(&self.dropout_probability) || !(0.0..1.0).contains(&self.id_switch_probability) {
            return bad("dropout and id-switch probabilities must be in [0, 1)".into());
        }
        for g in [self.fixed_green_a, self.fixed_green_b].into_iter().flatten() {
            if !(g > 0.0) {
                return bad(format!("fixed greens must be positive, got {g}"));
            }
        }
        if self.fixed_green_a.is_some() != self.fixed_green_b.is_some() {
            return bad("fixed_green_a_s and fixed_green_b_s go together".into());
        }
        self.flow_model.validate().map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl fmt::Display for ScenarioConfig {
    /// Scenario file form: one `key = value` per line, every field present.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "label = {}", self.label)?;
        writeln!(f, "left_vehicles = {}", self.left_vehicles)?;
        writeln!(f, "right_vehicles = {}", self.right_vehicles)?;
        writeln!(f, "left_clockwise = {}", opt(&self.left_clockwise))?;
        writeln!(f, "right_clockwise = {}", opt(&self.right_clockwise))?;
        writeln!(f, "left_length_m = {}", self.left_length)?;
        writeln!(f, "right_length_m = {}", self.right_length)?;
        writeln!(f, "mode = {}", self.mode)?;
        writeln!(f, "free_flow_speed_kph = {}", self.flow_model.free_flow_speed)?;
        writeln!(f, "jam_density_vpkm = {}", self.flow_model.jam_density)?;
        writeln!(f, "amber_s = {}", self.timing.amber)?;
        writeln!(f, "all_red_s = {}", self.timing.all_red)?;
        writeln!(f, "min_green_s = {}", self.timing.min_green)?;
        writeln!(f, "max_cycle_s = {}", self.timing.max_cycle)?;
        writeln!(f, "speed_limit_kph = {}", self.speed_limit)?;
        writeln!(f, "duration_s = {}", self.duration)?;
        writeln!(f, "dt_s = {}", self.dt)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "frame_rate_fps = {}", self.frame_rate)?;
        writeln!(f, "dropout_probability = {}", self.dropout_probability)?;
        writeln!(f, "id_switch_probability = {}", self.id_switch_probability)?;
        writeln!(f, "sector_length_m = {}", self.sector_length)?;
        writeln!(f, "camera_range_m = {}", self.camera_range)?;
        writeln!(f, "fixed_green_a_s = {}", opt(&self.fixed_green_a))?;
        writeln!(f, "fixed_green_b_s = {}", opt(&self.fixed_green_b))?;
        writeln!(f, "vehicle_length_m = {}", self.driver.vehicle_length)?;
        writeln!(f, "accel_mps2 = {}", self.driver.accel)?;
        writeln!(f, "comfortable_decel_mps2 = {}", self.driver.comfortable_decel)?;
        writeln!(f, "emergency_decel_mps2 = {}", self.driver.emergency_decel)?;
        writeln!(f, "min_gap_m = {}", self.driver.min_gap)?;
        writeln!(f, "stop_buffer_m = {}", self.driver.stop_buffer)?;
        writeln!(f, "conflict_zone_m = {}", self.conflict_zone)?;
        writeln!(f, "record_interval_s = {}", self.record_interval)?;
        writeln!(f, "cycle_time_min = {}", self.cycle_time_min)
    }
}

impl FromStr for ScenarioConfig {
    type Err = SimError;

    /// Starts from the defaults; keys not listed keep their default value.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut c = ScenarioConfig::default();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<f64>().map_err(|_| err(format!("{key}: bad number `{value}`")));
            let int = || value.parse::<usize>().map_err(|_| err(format!("{key}: bad integer `{value}`")));
            let opt_num = || -> Result<Option<f64>, SimError> {
                if value == "none" { Ok(None) } else { num().map(Some) }
            };
            let opt_int = || -> Result<Option<usize>, SimError> {
                if value == "none" { Ok(None) } else { int().map(Some) }
            };
            match key {
                "label" => c.label = value.to_string(),
                "left_vehicles" => c.left_vehicles = int()?,
                "right_vehicles" => c.right_vehicles = int()?,
                "left_clockwise" => c.left_clockwise = opt_int()?,
                "right_clockwise" => c.right_clockwise = opt_int()?,
                "left_length_m" => c.left_length = num()?,
                "right_length_m" => c.right_length = num()?,
                "mode" => c.mode = value.parse().map_err(err)?,
                "free_flow_speed_kph" => c.flow_model.free_flow_speed = num()?,
                "jam_density_vpkm" => c.flow_model.jam_density = num()?,
                "amber_s" => c.timing.amber = num()?,
                "all_red_s" => c.timing.all_red = num()?,
                "min_green_s" => c.timing.min_green = num()?,
                "max_cycle_s" => c.timing.max_cycle = num()?,
                "speed_limit_kph" => c.speed_limit = num()?,
                "duration_s" => c.duration = num()?,
                "dt_s" => c.dt = num()?,
                "seed" => c.seed = value.parse().map_err(|_| err(format!("seed: bad integer `{value}`")))?,
                "frame_rate_fps" => c.frame_rate = num()?,
                "dropout_probability" => c.dropout_probability = num()?,
                "id_switch_probability" => c.id_switch_probability = num()?,
                "sector_length_m" => c.sector_length = num()?,
                "camera_range_m" => c.camera_range = num()?,
                "fixed_green_a_s" => c.fixed_green_a = opt_num()?,
                "fixed_green_b_s" => c.fixed_green_b = opt_num()?,
                "vehicle_length_m" => c.driver.vehicle_length = num()?,
                "accel_mps2" => c.driver.accel = num()?,
                "comfortable_decel_mps2" => c.driver.comfortable_decel = num()?,
                "emergency_decel_mps2" => c.driver.emergency_decel = num()?,
                "min_gap_m" => c.driver.min_gap = num()?,
                "stop_buffer_m" => c.driver.stop_buffer = num()?,
                "conflict_zone_m" => c.conflict_zone = num()?,
                "record_interval_s" => c.record_interval = num()?,
                "cycle_time_min" => c.cycle_time_min = num()?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }
}
