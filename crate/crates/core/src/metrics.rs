//! Evaluation quantities: average speed and the time lost per intersection pass.
//!
//! Speed deficit is converted into time lost under the assumption that vehicles
//! only slow down at the intersection. Anything else that slows them (following
//! a leader on the open road, for instance) is attributed to the signal as well.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::ControlMode;
use crate::simulator::{RunOutput, SpeedTrace};

/// Loop travel time between two visits to the intersection, min.
pub const DEFAULT_CYCLE_TIME_MIN: f64 = 3.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("speed trace has no samples")]
    EmptyTrace,
    #[error("average pass count must be positive, got {0}")]
    NoPasses(f64),
    #[error("scenario labels differ: `{fixed}` vs `{adaptive}`")]
    ScenarioMismatch { fixed: String, adaptive: String },
    #[error("report sets differ in length: {fixed} fixed vs {adaptive} adaptive")]
    CountMismatch { fixed: usize, adaptive: usize },
    #[error("fixed-time baseline lost no time, saving is undefined")]
    ZeroBaseline,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Grand mean over every vehicle and every sample, km/h.
pub fn average_speed(trace: &SpeedTrace) -> Result<f64, MetricsError> {
    let n: usize = trace.samples.iter().map(Vec::len).sum();
    if n == 0 {
        return Err(MetricsError::EmptyTrace);
    }
    let sum: f64 = trace.samples.iter().flatten().sum();
    Ok(sum / n as f64 * 3.6)
}

/// Minutes lost to the signal over `sim_time` minutes.
pub fn total_time_lost(avg_speed: f64, limit: f64, sim_time: f64) -> f64 {
    debug_assert!(limit > 0.0);
    (limit - avg_speed) / limit * sim_time
}

/// How many times the average vehicle reached the intersection.
pub fn average_pass(sim_time: f64, total_lost: f64, cycle_time: f64) -> f64 {
    debug_assert!(cycle_time > 0.0);
    (sim_time - total_lost) / cycle_time
}

/// Seconds lost per pass.
pub fn average_time_lost(total_lost: f64, passes: f64) -> Result<f64, MetricsError> {
    if !(passes > 0.0) {
        return Err(MetricsError::NoPasses(passes));
    }
    Ok(60.0 * total_lost / passes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub mode: ControlMode,
    /// km/h
    pub average_speed: f64,
    /// min
    pub simulation_time: f64,
    /// min
    pub total_time_lost: f64,
    pub average_pass: f64,
    /// s
    pub average_time_lost: f64,
}

impl MetricsReport {
    /// Builds a report from an average speed (km/h) and a simulated span (min).
    pub fn from_average_speed(
        label: impl Into<String>,
        mode: ControlMode,
        average_speed: f64,
        speed_limit: f64,
        simulation_time: f64,
        cycle_time: f64,
    ) -> Result<Self, MetricsError> {
        let total = total_time_lost(average_speed, speed_limit, simulation_time);
        let passes = average_pass(simulation_time, total, cycle_time);
        Ok(Self {
            label: label.into(),
            mode,
            average_speed,
            simulation_time,
            total_time_lost: total,
            average_pass: passes,
            average_time_lost: average_time_lost(total, passes)?,
        })
    }

    pub fn from_run(out: &RunOutput) -> Result<Self, MetricsError> {
        let c = &out.config;
        Self::from_average_speed(
            c.label.clone(),
            c.mode,
            average_speed(&out.trace)?,
            c.speed_limit,
            out.duration() / 60.0,
            c.cycle_time_min,
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}]: average speed {:.3} km/h over {:.1} min, {:.4} min lost, {:.3} passes, {:.3} s lost per pass",
            self.label,
            self.mode,
            self.average_speed,
            self.simulation_time,
            self.total_time_lost,
            self.average_pass,
            self.average_time_lost
        )
    }
}

/// Percentage of the fixed-time loss per pass that the adaptive run avoided.
pub fn compare(fixed: &MetricsReport, adaptive: &MetricsReport) -> Result<f64, MetricsError> {
    if fixed.label != adaptive.label {
        return Err(MetricsError::ScenarioMismatch {
            fixed: fixed.label.clone(),
            adaptive: adaptive.label.clone(),
        });
    }
    if fixed.average_time_lost == adaptive.average_time_lost {
        return Ok(0.0);
    }
    if fixed.average_time_lost == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((fixed.average_time_lost - adaptive.average_time_lost) / fixed.average_time_lost * 100.0)
}

pub fn write_reports<W: Write>(w: W, reports: &[MetricsReport]) -> Result<(), MetricsError> {
    serde_json::to_writer_pretty(w, reports)?;
    Ok(())
}

pub fn read_reports<R: Read>(r: R) -> Result<Vec<MetricsReport>, MetricsError> {
    Ok(serde_json::from_reader(r)?)
}

/// One line of the fixed-vs-adaptive comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    /// s
    pub fixed_time_lost: f64,
    /// s
    pub adaptive_time_lost: f64,
    /// %
    pub saved: f64,
}

impl ComparisonRow {
    pub const CSV_HEADER: &'static str = "label,fixed_time_lost_s,adaptive_time_lost_s,saved_pct";

    pub fn new(fixed: &MetricsReport, adaptive: &MetricsReport) -> Result<Self, MetricsError> {
        Ok(Self {
            label: fixed.label.clone(),
            fixed_time_lost: fixed.average_time_lost,
            adaptive_time_lost: adaptive.average_time_lost,
            saved: compare(fixed, adaptive)?,
        })
    }
}

impl fmt::Display for ComparisonRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.label, self.fixed_time_lost, self.adaptive_time_lost, self.saved)
    }
}

impl FromStr for ComparisonRow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // label may itself contain commas; the numbers are the last three fields
        let mut parts = s.trim().rsplitn(4, ',');
        let mut num = |what: &str| -> Result<f64, String> {
            let field = parts.next().ok_or_else(|| format!("missing {what}"))?;
            field.trim().parse().map_err(|e| format!("bad {what} `{field}`: {e}"))
        };
        let saved = num("saved_pct")?;
        let adaptive_time_lost = num("adaptive_time_lost_s")?;
        let fixed_time_lost = num("fixed_time_lost_s")?;
        let label = parts.next().ok_or("missing label")?.to_string();
        Ok(Self { label, fixed_time_lost, adaptive_time_lost, saved })
    }
}

/// Pairs reports position by position. Labels must agree.
pub fn comparison_rows(
    fixed: &[MetricsReport],
    adaptive: &[MetricsReport],
) -> Result<Vec<ComparisonRow>, MetricsError> {
    if fixed.len() != adaptive.len() {
        return Err(MetricsError::CountMismatch { fixed: fixed.len(), adaptive: adaptive.len() });
    }
    fixed.iter().zip(adaptive).map(|(f, a)| ComparisonRow::new(f, a)).collect()
}

pub fn write_comparison_csv<W: Write>(mut w: W, rows: &[ComparisonRow]) -> std::io::Result<()> {
    writeln!(w, "{}", ComparisonRow::CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

pub fn read_comparison_csv<R: BufRead>(r: R) -> Result<Vec<ComparisonRow>, MetricsError> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (i == 0 && line.trim() == ComparisonRow::CSV_HEADER) {
            continue;
        }
        rows.push(line.parse().map_err(|msg| MetricsError::Parse { line: i + 1, msg })?);
    }
    Ok(rows)
}
