//! Greenshields speed-density model.
//!
//! Speed falls linearly with density, `v = v_f (1 - k / k_j)`, so flow
//! `q = v k` is a downward parabola in density whose vertex is the road
//! capacity `v_f k_j / 4`. Units throughout are km/h, veh/km and veh/h.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowModelError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("flow {flow:.3} veh/h exceeds capacity {capacity:.3} veh/h")]
    FlowExceedsCapacity { flow: f64, capacity: f64 },
    #[error("invalid parameters: free-flow speed and jam density must be positive")]
    InvalidParams,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One observed (density, speed) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedDensitySample {
    /// veh/km
    pub density: f64,
    /// km/h
    pub speed: f64,
}

impl SpeedDensitySample {
    pub fn new(density: f64, speed: f64) -> Self {
        Self { density, speed }
    }
}

/// Which root of `q(k) = flow` to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Left of the vertex, `k <= k_j / 2`.
    Uncongested,
    /// Right of the vertex, `k >= k_j / 2`.
    Congested,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowModelParams {
    /// km/h
    pub free_flow_speed: f64,
    /// veh/km
    pub jam_density: f64,
}

impl Default for FlowModelParams {
    /// 60 km/h free flow with jam density tuned so that capacity is 1679 veh/h.
    fn default() -> Self {
        Self { free_flow_speed: 60.0, jam_density: 111.93 }
    }
}

impl FlowModelParams {
    pub fn new(free_flow_speed: f64, jam_density: f64) -> Result<Self, FlowModelError> {
        let p = Self { free_flow_speed, jam_density };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FlowModelError> {
        let ok = self.free_flow_speed.is_finite()
            && self.jam_density.is_finite()
            && self.free_flow_speed > 0.0
            && self.jam_density > 0.0;
        if ok {
            Ok(())
        } else {
            Err(FlowModelError::InvalidParams)
        }
    }

    /// Speed in km/h at `density` veh/km. Densities past jam clamp to zero.
    pub fn speed_at_density(&self, density: f64) -> f64 {
        let density = density.max(0.0);
        (self.free_flow_speed * (1.0 - density / self.jam_density)).max(0.0)
    }

    /// Flow in veh/h at `density` veh/km.
    pub fn flow_at_density(&self, density: f64) -> f64 {
        self.speed_at_density(density) * density.max(0.0)
    }

    /// Capacity in veh/h, reached at half the jam density.
    pub fn max_flow(&self) -> f64 {
        self.free_flow_speed * self.jam_density / 4.0
    }

    pub fn critical_density(&self) -> f64 {
        self.jam_density / 2.0
    }

    /// Inverts the flow-density parabola on the requested branch.
    ///
    /// Flows above capacity by less than 1e-9 relative are treated as the
    /// vertex, anything further is an error.
    pub fn density_for_flow(&self, flow: f64, branch: Branch) -> Result<f64, FlowModelError> {
        let capacity = self.max_flow();
        if flow > capacity * (1.0 + 1e-9) {
            return Err(FlowModelError::FlowExceedsCapacity { flow, capacity });
        }
        let flow = flow.max(0.0);
        // k = k_j/2 * (1 -/+ sqrt(1 - q/q_max))
        let disc = (1.0 - flow / capacity).max(0.0).sqrt();
        let half = self.critical_density();
        Ok(match branch {
            Branch::Uncongested => half * (1.0 - disc),
            Branch::Congested => half * (1.0 + disc),
        })
    }

    /// Equilibrium speed for a follower keeping `gap` metres of clear road
    /// behind a leader, vehicles being `vehicle_length` metres long.
    ///
    /// The spacing `gap + vehicle_length` is read as a local density of
    /// `1000 / spacing` veh/km.
    pub fn speed_for_gap(&self, gap: f64, vehicle_length: f64) -> f64 {
        let spacing = gap.max(0.0) + vehicle_length;
        if spacing <= 0.0 || !spacing.is_finite() {
            return if spacing.is_infinite() { self.free_flow_speed } else { 0.0 };
        }
        self.speed_at_density(1000.0 / spacing)
            .clamp(0.0, self.free_flow_speed)
    }

    /// Clear gap in metres at which [`speed_for_gap`](Self::speed_for_gap)
    /// returns zero.
    pub fn jam_gap(&self, vehicle_length: f64) -> f64 {
        (1000.0 / self.jam_density - vehicle_length).max(0.0)
    }
}

/// Ordinary least squares of speed on density, read back as Greenshields
/// intercepts.
pub fn fit_speed_density(samples: &[SpeedDensitySample]) -> Result<FlowModelParams, FlowModelError> {
    if samples.len() < 2 {
        return Err(FlowModelError::DegenerateFit("need at least two samples"));
    }
    let n = samples.len() as f64;
    let mean_k = samples.iter().map(|s| s.density).sum::<f64>() / n;
    let mean_v = samples.iter().map(|s| s.speed).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for s in samples {
        let dk = s.density - mean_k;
        sxx += dk * dk;
        sxy += dk * (s.speed - mean_v);
    }
    let scale = samples.iter().map(|s| s.density.abs()).fold(0.0, f64::max).max(1.0);
    if !(sxx > (scale * 1e-12).powi(2) * n) {
        return Err(FlowModelError::DegenerateFit("all densities are equal"));
    }
    let slope = sxy / sxx;
    let intercept = mean_v - slope * mean_k;
    if !(slope < 0.0) {
        return Err(FlowModelError::DegenerateFit("speed does not decrease with density"));
    }
    if !(intercept > 0.0) {
        return Err(FlowModelError::DegenerateFit("free-flow intercept is not positive"));
    }
    Ok(FlowModelParams { free_flow_speed: intercept, jam_density: -intercept / slope })
}

/// Reads `density,speed` rows. A non-numeric first row is taken as a header;
/// blank lines and `#` comments are skipped.
pub fn read_samples<R: BufRead>(reader: R) -> Result<Vec<SpeedDensitySample>, FlowModelError> {
    let mut out = Vec::new();
    let mut seen_row = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(FlowModelError::Parse {
                line: lineno,
                msg: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let parsed = (fields[0].parse::<f64>(), fields[1].parse::<f64>());
        match parsed {
            (Ok(density), Ok(speed)) => {
                if !(density >= 0.0 && speed >= 0.0) {
                    return Err(FlowModelError::Parse {
                        line: lineno,
                        msg: "density and speed must be non-negative".into(),
                    });
                }
                out.push(SpeedDensitySample { density, speed });
                seen_row = true;
            }
            _ if !seen_row && out.is_empty() => {
                // header
                seen_row = true;
            }
            _ => {
                return Err(FlowModelError::Parse {
                    line: lineno,
                    msg: format!("not a number in `{body}`"),
                })
            }
        }
    }
    Ok(out)
}

impl fmt::Display for FlowModelParams {
    /// `key = value` lines, the same layout scenario files use.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "free_flow_speed_kph = {}", self.free_flow_speed)?;
        writeln!(f, "jam_density_vpkm = {}", self.jam_density)?;
        writeln!(f, "max_flow_vph = {}", self.max_flow())
    }
}

impl FromStr for FlowModelParams {
    type Err = FlowModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (mut vf, mut kj) = (None, None);
        for (i, line) in s.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |msg: String| FlowModelError::Parse { line: i + 1, msg };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("bad number `{}`", value.trim())))?;
            match key.trim() {
                "free_flow_speed_kph" => vf = Some(value),
                "jam_density_vpkm" => kj = Some(value),
                "max_flow_vph" => {}
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        match (vf, kj) {
            (Some(vf), Some(kj)) => FlowModelParams::new(vf, kj),
            _ => Err(FlowModelError::Parse { line: 0, msg: "missing free_flow_speed_kph or jam_density_vpkm".into() }),
        }
    }
}
