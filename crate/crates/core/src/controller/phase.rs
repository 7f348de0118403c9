use serde::{Deserialize, Serialize};

use super::SignalTiming;
use crate::road::Road;

/// Six-state cycle: `GreenA → AmberA → AllRed1 → GreenB → AmberB → AllRed2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    GreenA,
    AmberA,
    AllRed1,
    GreenB,
    AmberB,
    AllRed2,
}

impl Phase {
    pub fn next(self) -> Phase {
        match self {
            Phase::GreenA => Phase::AmberA,
            Phase::AmberA => Phase::AllRed1,
            Phase::AllRed1 => Phase::GreenB,
            Phase::GreenB => Phase::AmberB,
            Phase::AmberB => Phase::AllRed2,
            Phase::AllRed2 => Phase::GreenA,
        }
    }

    pub fn indication(self, road: Road) -> Indication {
        match (self, road) {
            (Phase::GreenA, Road::A) | (Phase::GreenB, Road::B) => Indication::Green,
            (Phase::AmberA, Road::A) | (Phase::AmberB, Road::B) => Indication::Amber,
            _ => Indication::Red,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Indication {
    Green,
    Amber,
    Red,
}

/// Green durations for the two roads, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub green_a: f64,
    pub green_b: f64,
}

impl Schedule {
    pub fn green(&self, road: Road) -> f64 {
        match road {
            Road::A => self.green_a,
            Road::B => self.green_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalEvent {
    /// The road's green just ended. Coincides with its amber onset.
    GreenEnd(Road),
    AmberStart(Road),
    /// The last all-red ended; a new cycle starts with green for road A.
    CycleEnd,
}

/// Receives phase events and chooses the greens of each new cycle.
pub trait ScheduleProvider {
    /// `offset` is how far into the current step the event fell, s.
    fn on_event(&mut self, _event: SignalEvent, _offset: f64) {}

    fn next_schedule(&mut self, current: Schedule) -> Schedule;
}

/// Keeps whatever schedule is running.
#[derive(Debug, Default, Clone, Copy)]
pub struct KeepSchedule;

impl ScheduleProvider for KeepSchedule {
    fn next_schedule(&mut self, current: Schedule) -> Schedule {
        current
    }
}

// Phase expiry tolerance; dt multiples drift by a few ulps.
const EXPIRY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub phase: Phase,
    pub time_in_phase: f64,
    pub schedule: Schedule,
}

impl PhaseState {
    /// Start of a cycle: green for road A.
    pub fn new(schedule: Schedule) -> Self {
        Self { phase: Phase::GreenA, time_in_phase: 0.0, schedule }
    }

    pub fn phase_duration(&self, timing: &SignalTiming) -> f64 {
        match self.phase {
            Phase::GreenA => self.schedule.green_a,
            Phase::GreenB => self.schedule.green_b,
            Phase::AmberA | Phase::AmberB => timing.amber,
            Phase::AllRed1 | Phase::AllRed2 => timing.all_red,
        }
    }

    pub fn indication(&self, road: Road) -> Indication {
        self.phase.indication(road)
    }

    /// Seconds until the current phase expires.
    pub fn remaining(&self, timing: &SignalTiming) -> f64 {
        (self.phase_duration(timing) - self.time_in_phase).max(0.0)
    }

    /// Advances the clock by `dt`, taking as many transitions as expire in
    /// that span. Time left over after an expiry carries into the next phase.
    pub fn step<P: ScheduleProvider + ?Sized>(
        &mut self,
        dt: f64,
        timing: &SignalTiming,
        provider: &mut P,
    ) -> Vec<SignalEvent> {
        debug_assert!(dt > 0.0);
        let mut events = Vec::new();
        self.time_in_phase += dt;
        loop {
            let duration = self.phase_duration(timing);
            if self.time_in_phase + EXPIRY_EPS < duration {
                break;
            }
            let leftover = (self.time_in_phase - duration).max(0.0);
            let offset = (dt - leftover).clamp(0.0, dt);
            let mut emit = |e: SignalEvent, events: &mut Vec<SignalEvent>| {
                provider.on_event(e, offset);
                events.push(e);
            };
            match self.phase {
                Phase::GreenA => {
                    emit(SignalEvent::GreenEnd(Road::A), &mut events);
                    emit(SignalEvent::AmberStart(Road::A), &mut events);
                }
                Phase::GreenB => {
                    emit(SignalEvent::GreenEnd(Road::B), &mut events);
                    emit(SignalEvent::AmberStart(Road::B), &mut events);
                }
                Phase::AllRed2 => {
                    emit(SignalEvent::CycleEnd, &mut events);
                    self.schedule = provider.next_schedule(self.schedule);
                }
                _ => {}
            }
            self.phase = self.phase.next();
            self.time_in_phase = leftover;
        }
        events
    }
}
