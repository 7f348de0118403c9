use serde::{Deserialize, Serialize};

use super::{ControllerError, SignalTiming};
use crate::flow_model::FlowModelParams;

/// Every intermediate quantity of one green-split computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WebsterComputation {
    pub y_a: f64,
    pub y_b: f64,
    /// Sum of the two flow ratios.
    pub y_sum: f64,
    /// Lost time per cycle, s.
    pub lost_time: f64,
    /// Ideal cycle length after the `max_cycle` cap, s.
    pub ideal_cycle: f64,
    pub green_a: f64,
    pub green_b: f64,
    /// Greens plus all amber and all-red intervals, s.
    pub cycle: f64,
}

/// Measured flow over capacity. Both in the same unit.
pub fn flow_ratio(realtime_flow: f64, max_flow: f64) -> Result<f64, ControllerError> {
    if !(max_flow > 0.0) || !max_flow.is_finite() {
        return Err(ControllerError::ZeroCapacity(max_flow));
    }
    if !(realtime_flow >= 0.0) || !realtime_flow.is_finite() {
        return Err(ControllerError::InvalidRatio(realtime_flow));
    }
    Ok(realtime_flow / max_flow)
}

/// A road's demand is its busier direction.
pub fn road_flow(lane_flow_1: f64, lane_flow_2: f64) -> f64 {
    lane_flow_1.max(lane_flow_2)
}

/// Splits the cycle between two roads in proportion to their flow ratios.
///
/// The ideal cycle is `1.5 L / |1 - Y|` with `L` the lost time and `Y` the
/// summed ratios; the greens share `|C0 - L|`. Both absolute values keep
/// the result positive when `Y > 1`. The ideal cycle is capped at
/// `timing.max_cycle` (which also covers `Y = 1`) and each green is floored at
/// `timing.min_green`.
pub fn webster_schedule(
    y_a: f64,
    y_b: f64,
    timing: &SignalTiming,
) -> Result<WebsterComputation, ControllerError> {
    for y in [y_a, y_b] {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(ControllerError::InvalidRatio(y));
        }
    }
    let y_sum = y_a + y_b;
    if y_sum == 0.0 {
        return Err(ControllerError::BothZero);
    }
    let lost_time = timing.lost_time();
    let saturation = (1.0 - y_sum).abs();
    let ideal_cycle = if saturation > 0.0 {
        (1.5 * lost_time / saturation).min(timing.max_cycle)
    } else {
        timing.max_cycle
    };
    let effective = (ideal_cycle - lost_time).abs();
    let green_a = (y_a / y_sum * effective).max(timing.min_green);
    let green_b = (y_b / y_sum * effective).max(timing.min_green);
    Ok(WebsterComputation {
        y_a,
        y_b,
        y_sum,
        lost_time,
        ideal_cycle,
        green_a,
        green_b,
        cycle: green_a + green_b + lost_time,
    })
}

/// Baseline plan from the vehicle population of each ring.
///
/// Each road's count over its ring length gives a density, the flow model
/// turns that into a flow and then a ratio of capacity.
pub fn fixed_time_schedule(
    initial_vehicle_counts: [usize; 2],
    flow_model: &FlowModelParams,
    road_lengths_m: [f64; 2],
    timing: &SignalTiming,
) -> Result<WebsterComputation, ControllerError> {
    flow_model.validate()?;
    let capacity = flow_model.max_flow();
    let mut ratios = [0.0; 2];
    for i in 0..2 {
        let length = road_lengths_m[i];
        if !(length > 0.0) {
            return Err(ControllerError::InvalidLength(length));
        }
        let density = initial_vehicle_counts[i] as f64 / (length / 1000.0);
        ratios[i] = flow_ratio(flow_model.flow_at_density(density), capacity)?;
    }
    webster_schedule(ratios[0], ratios[1], timing)
}
