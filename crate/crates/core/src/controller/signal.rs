use serde::{Deserialize, Serialize};

use super::phase::{Indication, PhaseState, Schedule, ScheduleProvider, SignalEvent};
use super::webster::{flow_ratio, road_flow, webster_schedule, WebsterComputation};
use super::{ControlMode, SignalTiming};
use crate::road::{LaneId, Road};
use crate::sensing::MeasurementWindow;

/// One row of the schedule log: the plan in force for a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub cycle_index: usize,
    pub y_a: f64,
    pub y_b: f64,
    pub y_sum: f64,
    pub ideal_cycle: f64,
    pub green_a: f64,
    pub green_b: f64,
    pub cycle: f64,
}

impl ScheduleRecord {
    pub const CSV_HEADER: &'static str =
        "cycle_index,y_a,y_b,Y,C0_s,G_a_s,G_b_s,cycle_s";

    fn new(cycle_index: usize, w: &WebsterComputation) -> Self {
        Self {
            cycle_index,
            y_a: w.y_a,
            y_b: w.y_b,
            y_sum: w.y_sum,
            ideal_cycle: w.ideal_cycle,
            green_a: w.green_a,
            green_b: w.green_b,
            cycle: w.cycle,
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.cycle_index,
            self.y_a,
            self.y_b,
            self.y_sum,
            self.ideal_cycle,
            self.green_a,
            self.green_b,
            self.cycle
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenWindow {
    start_time: f64,
    start_counts: [u64; 2],
}

/// Window bookkeeping and re-planning; everything except the phase state.
#[derive(Debug, Clone)]
struct Planner {
    mode: ControlMode,
    timing: SignalTiming,
    /// veh/s
    capacity: f64,
    current: WebsterComputation,
    cycle_index: usize,
    /// Clock at the start of the step being processed, s.
    step_start: f64,
    lane_counts: [u64; 4],
    open: [Option<OpenWindow>; 2],
    /// Road flow (veh/s) from the latest closed window, and whether it has
    /// been consumed by a re-plan yet.
    latest: [Option<(f64, bool)>; 2],
    windows: Vec<MeasurementWindow>,
    log: Vec<ScheduleRecord>,
}

impl Planner {
    fn open_window(&mut self, road: Road, time: f64) {
        let [l1, l2] = road.lanes();
        self.open[road.index()] = Some(OpenWindow {
            start_time: time,
            start_counts: [self.lane_counts[l1.index()], self.lane_counts[l2.index()]],
        });
    }

    fn close_window(&mut self, road: Road, time: f64) {
        let Some(open) = self.open[road.index()].take() else {
            return;
        };
        if time <= open.start_time {
            return;
        }
        let mut flows = [0.0; 2];
        for (i, lane) in road.lanes().into_iter().enumerate() {
            let window = MeasurementWindow {
                road,
                lane,
                start_time: open.start_time,
                end_time: time,
                vehicle_count: self.lane_counts[lane.index()] - open.start_counts[i],
            };
            // end_time > start_time was checked above
            flows[i] = window.realtime_flow().unwrap_or(0.0);
            self.windows.push(window);
        }
        self.latest[road.index()] = Some((road_flow(flows[0], flows[1]), true));
    }

    fn replan(&mut self) {
        let (Some((flow_a, true)), Some((flow_b, true))) = (self.latest[0], self.latest[1]) else {
            return;
        };
        self.latest[0] = Some((flow_a, false));
        self.latest[1] = Some((flow_b, false));
        let ratios = flow_ratio(flow_a, self.capacity)
            .and_then(|ya| Ok((ya, flow_ratio(flow_b, self.capacity)?)));
        let next = ratios.and_then(|(ya, yb)| webster_schedule(ya, yb, &self.timing));
        // BothZero (idle roads) keeps the running plan
        if let Ok(w) = next {
            self.current = w;
        }
    }
}

impl ScheduleProvider for Planner {
    fn on_event(&mut self, event: SignalEvent, offset: f64) {
        let time = self.step_start + offset;
        match event {
            SignalEvent::GreenEnd(road) => self.close_window(road, time),
            SignalEvent::AmberStart(road) => self.open_window(road, time),
            SignalEvent::CycleEnd => {}
        }
    }

    fn next_schedule(&mut self, _current: Schedule) -> Schedule {
        if self.mode == ControlMode::Adaptive {
            self.replan();
        }
        self.cycle_index += 1;
        self.log.push(ScheduleRecord::new(self.cycle_index, &self.current));
        Schedule { green_a: self.current.green_a, green_b: self.current.green_b }
    }
}

/// Signal head for the intersection in either fixed-time or adaptive mode.
///
/// Each road measures its flow over a window running from its amber onset
/// to the end of its next green. In adaptive mode the greens are recomputed
/// at every cycle end once both roads have closed a window since the last
/// recomputation. The first windows open at time zero so the second cycle
/// is already adaptive.
#[derive(Debug, Clone)]
pub struct SignalController {
    state: PhaseState,
    planner: Planner,
}

impl SignalController {
    /// `max_flow_vph` is the per-lane capacity used to normalize measured
    /// flows. `initial` is the plan for the first cycle.
    pub fn new(
        mode: ControlMode,
        timing: SignalTiming,
        max_flow_vph: f64,
        initial: WebsterComputation,
    ) -> Self {
        let mut planner = Planner {
            mode,
            timing,
            capacity: max_flow_vph / 3600.0,
            current: initial,
            cycle_index: 0,
            step_start: 0.0,
            lane_counts: [0; 4],
            open: [None, None],
            latest: [None, None],
            windows: Vec::new(),
            log: vec![ScheduleRecord::new(0, &initial)],
        };
        planner.open_window(Road::A, 0.0);
        planner.open_window(Road::B, 0.0);
        let state = PhaseState::new(Schedule { green_a: initial.green_a, green_b: initial.green_b });
        Self { state, planner }
    }

    /// Advances from `now` to `now + dt`. `lane_counts` are the cumulative
    /// counter totals of the four approach lanes.
    pub fn step(&mut self, now: f64, dt: f64, lane_counts: [u64; 4]) -> Vec<SignalEvent> {
        self.planner.step_start = now;
        self.planner.lane_counts = lane_counts;
        let timing = self.planner.timing;
        self.state.step(dt, &timing, &mut self.planner)
    }

    pub fn indication(&self, road: Road) -> Indication {
        self.state.indication(road)
    }

    /// Indication shown to an approach lane.
    pub fn lane_indication(&self, lane: LaneId) -> Indication {
        self.state.indication(lane.road())
    }

    pub fn state(&self) -> &PhaseState {
        &self.state
    }

    pub fn timing(&self) -> &SignalTiming {
        &self.planner.timing
    }

    pub fn mode(&self) -> ControlMode {
        self.planner.mode
    }

    /// The plan currently in force.
    pub fn current(&self) -> &WebsterComputation {
        &self.planner.current
    }

    pub fn schedule_log(&self) -> &[ScheduleRecord] {
        &self.planner.log
    }

    /// Closed measurement windows, one per lane per window.
    pub fn windows(&self) -> &[MeasurementWindow] {
        &self.planner.windows
    }

    pub fn into_logs(self) -> (Vec<ScheduleRecord>, Vec<MeasurementWindow>) {
        (self.planner.log, self.planner.windows)
    }
}
