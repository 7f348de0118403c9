use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{DriverParams, ScenarioConfig};
use super::trace::SpeedTrace;
use super::SimError;
use crate::controller::{
    fixed_time_schedule, ControllerError, Indication, Phase, SignalController, SignalEvent, SignalTiming,
    WebsterComputation,
};
use crate::flow_model::FlowModelParams;
use crate::road::{LaneId, Road};
use crate::sensing::{
    ApproachScene, CounterState, SectorLayout, TrackObservation, VehicleSighting, VirtualCamera, VirtualCameraConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u32,
    pub lane: LaneId,
    /// Front bumper, m along the loop in `[0, length)`.
    pub position: f64,
    /// m/s
    pub speed: f64,
    /// Completed laps.
    pub passes: u32,
    /// Stop-or-go decision taken at amber onset, cleared on green.
    pub amber_choice: Option<bool>,
}

/// One directional lane: a closed loop crossing the stop line once, at half
/// its length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    /// m
    pub length: f64,
    /// m along the loop
    pub stop_line: f64,
    /// In loop order; each vehicle's leader is the next one, wrapping.
    pub vehicles: Vec<Vehicle>,
}

impl Lane {
    /// Signed distance past the stop line, in `[-length/2, length/2)`.
    pub fn relative_position(&self, position: f64) -> f64 {
        position - self.stop_line
    }

    /// Clear road ahead of vehicle `i`, m. `None` for a lone vehicle.
    pub fn gap_ahead(&self, i: usize, vehicle_length: f64) -> Option<f64> {
        let n = self.vehicles.len();
        if n < 2 {
            return None;
        }
        let leader = &self.vehicles[(i + 1) % n];
        let mut d = leader.position - self.vehicles[i].position;
        if d < 0.0 {
            d += self.length;
        }
        Some(d - vehicle_length)
    }
}

/// What a driver knows about the signal ahead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalView {
    pub indication: Indication,
    /// Distance to the stop line, m; `None` once past it.
    pub distance_to_stop_line: Option<f64>,
    /// Amber decision already taken: keep going.
    pub proceed_on_amber: bool,
}

impl SignalView {
    pub fn open_road() -> Self {
        Self { indication: Indication::Green, distance_to_stop_line: None, proceed_on_amber: false }
    }
}

/// Target speed in m/s: the smallest of the speed limit, the equilibrium
/// speed for the gap ahead and, when the signal says stop, the speed that
/// still stops short of the line.
pub fn desired_speed(
    speed_limit: f64,
    flow_model: &FlowModelParams,
    driver: &DriverParams,
    leader_gap: Option<f64>,
    signal: &SignalView,
    dt: f64,
) -> f64 {
    let mut v = speed_limit;
    if let Some(gap) = leader_gap {
        v = v.min(flow_model.speed_for_gap(gap, driver.vehicle_length) / 3.6);
    }
    if let Some(d) = signal.distance_to_stop_line {
        let must_stop = match signal.indication {
            Indication::Red => !signal.proceed_on_amber,
            Indication::Amber => !signal.proceed_on_amber,
            Indication::Green => false,
        };
        if must_stop {
            let room = (d - driver.stop_buffer).max(0.0);
            v = v.min((2.0 * driver.comfortable_decel * room).sqrt()).min(room / dt);
        }
    }
    v.max(0.0)
}

/// Whether a vehicle at `speed` and `distance` from the line should carry on
/// through an amber rather than brake.
pub fn proceeds_on_amber(speed: f64, distance: f64, driver: &DriverParams) -> bool {
    let room = distance - driver.stop_buffer;
    speed * speed / (2.0 * driver.comfortable_decel) > room
}

/// Safety bookkeeping over a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyStats {
    /// Smallest bumper-to-bumper gap seen, m.
    pub min_gap: f64,
    pub red_crossings: u64,
    pub amber_crossings: u64,
    pub max_simultaneous_greens: usize,
    /// Shortest time between one road's green ending and the other's
    /// starting, s.
    pub min_green_separation: f64,
    pub max_speed: f64,
    pub min_speed: f64,
}

impl Default for SafetyStats {
    fn default() -> Self {
        Self {
            min_gap: f64::INFINITY,
            red_crossings: 0,
            amber_crossings: 0,
            max_simultaneous_greens: 0,
            min_green_separation: f64::INFINITY,
            max_speed: 0.0,
            min_speed: f64::INFINITY,
        }
    }
}

/// Everything that happened in one step.
#[derive(Debug, Clone, Default)]
pub struct StepOutput {
    pub observations: Vec<TrackObservation>,
    pub newly_counted: Vec<(LaneId, u64)>,
    pub events: Vec<SignalEvent>,
}

/// The two rings, the signal, the cameras and their counters.
#[derive(Debug, Clone)]
pub struct World {
    config: ScenarioConfig,
    pub lanes: [Lane; 4],
    signal: SignalController,
    cameras: Vec<VirtualCamera>,
    counters: Vec<CounterState>,
    layouts: Vec<SectorLayout>,
    tick: u64,
    steps_per_frame: u64,
    steps_per_record: u64,
    trace: SpeedTrace,
    safety: SafetyStats,
    /// Sector-boundary crossings per lane, for counter accuracy.
    true_crossings: [u64; 4],
    green_ended_at: [Option<f64>; 2],
}

impl ApproachScene for World {
    fn approach_positions(&self, lane: LaneId) -> Vec<VehicleSighting> {
        LanesScene(&self.lanes).approach_positions(lane)
    }
}

/// First-cycle plan: explicit greens when given, else derived from the
/// vehicle counts, else (no vehicles at all) the zero-demand limit.
pub fn initial_schedule(config: &ScenarioConfig) -> Result<WebsterComputation, SimError> {
    let t = &config.timing;
    if let (Some(ga), Some(gb)) = (config.fixed_green_a, config.fixed_green_b) {
        return Ok(schedule_from_greens(ga, gb, t));
    }
    match fixed_time_schedule(
        [config.left_vehicles, config.right_vehicles],
        &config.flow_model,
        [config.left_length, config.right_length],
        t,
    ) {
        Ok(w) => Ok(w),
        Err(ControllerError::BothZero) => {
            let lost = t.lost_time();
            // C0 -> 1.5 L as Y -> 0, split evenly
            let g = (0.25 * lost).max(t.min_green);
            Ok(WebsterComputation {
                y_a: 0.0,
                y_b: 0.0,
                y_sum: 0.0,
                lost_time: lost,
                ideal_cycle: 1.5 * lost,
                green_a: g,
                green_b: g,
                cycle: 2.0 * g + lost,
            })
        }
        Err(e) => Err(SimError::Config(e.to_string())),
    }
}

/// A plan with the given greens, the flow ratios being those the Webster
/// split would need to produce it on an undersaturated intersection.
pub fn schedule_from_greens(green_a: f64, green_b: f64, timing: &SignalTiming) -> WebsterComputation {
    let lost = timing.lost_time();
    let effective = green_a + green_b;
    let ideal_cycle = effective + lost;
    let y_sum = 1.0 - 1.5 * lost / ideal_cycle;
    WebsterComputation {
        y_a: y_sum * green_a / effective,
        y_b: y_sum * green_b / effective,
        y_sum,
        lost_time: lost,
        ideal_cycle,
        green_a,
        green_b,
        cycle: green_a + green_b + lost,
    }
}

impl World {
    /// Places each lane's vehicles at equal spacing behind a seeded random
    /// offset, starts the signal at green for road A.
    pub fn new(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let driver = config.driver;
        let populations = config.lane_populations();
        let lengths = config.lane_lengths();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(u64::MAX);

        let mut lanes: Vec<Lane> = Vec::with_capacity(4);
        for lane_id in LaneId::ALL {
            let n = populations[lane_id.index()];
            let length = lengths[lane_id.index()];
            let footprint = n as f64 * (driver.vehicle_length + driver.min_gap);
            if footprint > length {
                return Err(SimError::Overcapacity { lane: lane_id, vehicles: n, length });
            }
            let spacing = if n > 0 { length / n as f64 } else { length };
            let offset = rng.gen::<f64>() * spacing;
            let vehicles = (0..n)
                .map(|i| {
                    let mut position = offset + i as f64 * spacing;
                    if position >= length {
                        position -= length;
                    }
                    Vehicle { id: 0, lane: lane_id, position, speed: 0.0, passes: 0, amber_choice: None }
                })
                .collect::<Vec<_>>();
            let mut lane = Lane { id: lane_id, length, stop_line: length / 2.0, vehicles };
            // loop order starting from the smallest position
            lane.vehicles.sort_by(|a, b| a.position.total_cmp(&b.position));
            lanes.push(lane);
        }
        // ids are assigned per lane in loop order
        let mut base = 0u32;
        for lane in &mut lanes {
            for (i, v) in lane.vehicles.iter_mut().enumerate() {
                v.id = base + i as u32;
            }
            base += lane.vehicles.len() as u32;
        }
        let lanes: [Lane; 4] = lanes.try_into().expect("four lanes");

        let initial = initial_schedule(config)?;
        let signal = SignalController::new(config.mode, config.timing, config.flow_model.max_flow(), initial);

        let mut cameras = Vec::with_capacity(4);
        let mut layouts = Vec::with_capacity(4);
        for lane_id in LaneId::ALL {
            let cam = VirtualCameraConfig {
                lane_id,
                visible_window: (-config.camera_range, 0.0),
                frame_rate: config.frame_rate,
                dropout_probability: config.dropout_probability,
                id_switch_probability: config.id_switch_probability,
                rng_seed: config.seed,
            };
            cameras.push(VirtualCamera::new(cam).map_err(|e| SimError::Config(e.to_string()))?);
            layouts.push(
                SectorLayout::at_stop_line(lane_id, config.sector_length)
                    .map_err(|e| SimError::Config(e.to_string()))?,
            );
        }
        let counters = (0..4).map(|_| CounterState::new(config.frame_rate)).collect();

        let steps_per_frame = (1.0 / (config.frame_rate * config.dt)).round() as u64;
        let steps_per_record = (config.record_interval / config.dt).round() as u64;
        let trace = SpeedTrace::new(config.record_interval, base as usize);

        let mut world = World {
            config: config.clone(),
            lanes,
            signal,
            cameras,
            counters,
            layouts,
            tick: 0,
            steps_per_frame,
            steps_per_record,
            trace,
            safety: SafetyStats::default(),
            true_crossings: [0; 4],
            green_ended_at: [None, None],
        };
        world.set_initial_speeds();
        world.check_gaps()?;
        Ok(world)
    }

    fn set_initial_speeds(&mut self) {
        let limit = self.config.speed_limit_mps();
        let driver = self.config.driver;
        let fm = self.config.flow_model;
        let dt = self.config.dt;
        for li in 0..4 {
            let indication = self.signal.lane_indication(self.lanes[li].id);
            let speeds: Vec<f64> = (0..self.lanes[li].vehicles.len())
                .map(|i| {
                    let lane = &self.lanes[li];
                    let rel = lane.relative_position(lane.vehicles[i].position);
                    let view = SignalView {
                        indication,
                        distance_to_stop_line: (rel < 0.0).then_some(-rel),
                        proceed_on_amber: false,
                    };
                    desired_speed(limit, &fm, &driver, lane.gap_ahead(i, driver.vehicle_length), &view, dt)
                })
                .collect();
            for (v, s) in self.lanes[li].vehicles.iter_mut().zip(speeds) {
                v.speed = s;
            }
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn signal(&self) -> &SignalController {
        &self.signal
    }

    /// Simulated time, s.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn trace(&self) -> &SpeedTrace {
        &self.trace
    }

    pub fn safety(&self) -> &SafetyStats {
        &self.safety
    }

    pub fn lane_counts(&self) -> [u64; 4] {
        [self.counters[0].count, self.counters[1].count, self.counters[2].count, self.counters[3].count]
    }

    pub fn true_crossings(&self) -> [u64; 4] {
        self.true_crossings
    }

    pub fn vehicle_count(&self) -> usize {
        self.lanes.iter().map(|l| l.vehicles.len()).sum()
    }

    pub fn into_parts(self) -> (ScenarioConfig, SignalController, SpeedTrace, SafetyStats, [u64; 4], [u64; 4]) {
        let counts = self.lane_counts();
        (self.config, self.signal, self.trace, self.safety, counts, self.true_crossings)
    }

    fn check_gaps(&mut self) -> Result<(), SimError> {
        let len = self.config.driver.vehicle_length;
        for lane in &self.lanes {
            for i in 0..lane.vehicles.len() {
                if let Some(gap) = lane.gap_ahead(i, len) {
                    self.safety.min_gap = self.safety.min_gap.min(gap);
                    if gap < 0.0 {
                        return Err(SimError::Collision { lane: lane.id, vehicle: lane.vehicles[i].id, gap, time: self.time() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Advances the world by one time step.
    pub fn step(&mut self) -> Result<StepOutput, SimError> {
        let dt = self.config.dt;
        let now = self.time();
        let limit = self.config.speed_limit_mps();
        let driver = self.config.driver;
        let fm = self.config.flow_model;
        let mut out = StepOutput::default();

        // 1. speeds from the state at the start of the step
        for li in 0..4 {
            let indication = self.signal.lane_indication(self.lanes[li].id);
            let n = self.lanes[li].vehicles.len();
            let mut new_speeds = Vec::with_capacity(n);
            for i in 0..n {
                let lane = &self.lanes[li];
                let v = &lane.vehicles[i];
                let rel = lane.relative_position(v.position);
                let distance = (rel < 0.0).then_some(-rel);
                let choice = match (indication, distance) {
                    (Indication::Green, _) | (_, None) => None,
                    (Indication::Amber, Some(d)) => Some(v.amber_choice.unwrap_or_else(|| proceeds_on_amber(v.speed, d, &driver))),
                    (Indication::Red, Some(_)) => v.amber_choice,
                };
                let view = SignalView {
                    indication,
                    distance_to_stop_line: distance,
                    proceed_on_amber: choice == Some(true),
                };
                let target = desired_speed(limit, &fm, &driver, lane.gap_ahead(i, driver.vehicle_length), &view, dt);
                let lo = (v.speed - driver.emergency_decel * dt).max(0.0);
                let hi = v.speed + driver.accel * dt;
                new_speeds.push((target.clamp(lo, hi.max(lo)), choice));
            }
            // 2. move
            let lane = &mut self.lanes[li];
            let sector_boundary = -self.config.sector_length;
            for (v, (speed, choice)) in lane.vehicles.iter_mut().zip(new_speeds) {
                let before = v.position - lane.stop_line;
                v.speed = speed;
                v.amber_choice = choice;
                v.position += speed * dt;
                if v.position >= lane.length {
                    v.position -= lane.length;
                    v.passes += 1;
                }
                let after = v.position - lane.stop_line;
                if before < sector_boundary && after >= sector_boundary {
                    self.true_crossings[li] += 1;
                }
                if before < 0.0 && after >= 0.0 {
                    match indication {
                        Indication::Red => self.safety.red_crossings += 1,
                        Indication::Amber => self.safety.amber_crossings += 1,
                        Indication::Green => {}
                    }
                }
                self.safety.max_speed = self.safety.max_speed.max(speed);
                self.safety.min_speed = self.safety.min_speed.min(speed);
            }
        }
        if self.safety.red_crossings > 0 {
            return Err(SimError::RedLightCrossing { time: now });
        }
        self.check_gaps()?;
        self.tick += 1;
        let end = self.time();

        // 3. cameras on frame boundaries
        if self.tick.is_multiple_of(self.steps_per_frame) {
            let frame = self.tick / self.steps_per_frame;
            for li in 0..4 {
                let obs = self.cameras[li].observe(&LanesScene(&self.lanes), frame);
                let newly = self.counters[li].update(&self.layouts[li], &obs, frame);
                out.newly_counted.extend(newly.into_iter().map(|id| (LaneId::ALL[li], id)));
                out.observations.extend(obs);
            }
        }

        // 4. signal
        let before = self.signal.state().phase;
        out.events = self.signal.step(now, dt, self.lane_counts());
        let state = self.signal.state();
        if state.phase != before {
            match (before, state.phase) {
                (Phase::GreenA, _) => self.green_ended_at[0] = Some(end - state.time_in_phase),
                (Phase::GreenB, _) => self.green_ended_at[1] = Some(end - state.time_in_phase),
                _ => {}
            }
            let started = match state.phase {
                Phase::GreenA => Some(Road::A),
                Phase::GreenB => Some(Road::B),
                _ => None,
            };
            if let Some(road) = started {
                if let Some(t) = self.green_ended_at[road.other().index()] {
                    let sep = (end - state.time_in_phase) - t;
                    self.safety.min_green_separation = self.safety.min_green_separation.min(sep);
                }
            }
        }
        let greens = Road::BOTH.iter().filter(|r| self.signal.indication(**r) == Indication::Green).count();
        self.safety.max_simultaneous_greens = self.safety.max_simultaneous_greens.max(greens);

        // 5. speed samples
        if self.tick.is_multiple_of(self.steps_per_record) {
            let speeds = self.lanes.iter().flat_map(|l| l.vehicles.iter().map(|v| v.speed));
            self.trace.record(speeds);
        }
        Ok(out)
    }
}

/// Borrow of the lanes alone, so cameras can look while counters mutate.
struct LanesScene<'a>(&'a [Lane; 4]);

impl ApproachScene for LanesScene<'_> {
    fn approach_positions(&self, lane: LaneId) -> Vec<VehicleSighting> {
        let Some(l) = self.0.get(lane.index()) else {
            return Vec::new();
        };
        l.vehicles
            .iter()
            .map(|v| VehicleSighting { vehicle_id: v.id, pass: v.passes, position: l.relative_position(v.position) })
            .collect()
    }
}
