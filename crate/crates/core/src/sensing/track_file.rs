use std::io::{BufRead, Write};

use super::{SensingError, TrackObservation};
use crate::road::LaneId;

pub const TRACK_HEADER: &str = "frame_index,track_id,lane_id,position_m";

/// Reads `frame_index,track_id,lane_id,position_m` rows. Header line
/// optional, `#` comments and blank lines skipped.
pub fn read_tracks<R: BufRead>(reader: R) -> Result<Vec<TrackObservation>, SensingError> {
    let mut out = Vec::new();
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if first && body.starts_with("frame_index") {
            first = false;
            continue;
        }
        first = false;
        let err = |msg: String| SensingError::Parse { line: lineno, msg };
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let frame_index = fields[0].parse().map_err(|_| err(format!("bad frame_index `{}`", fields[0])))?;
        let track_id = fields[1].parse().map_err(|_| err(format!("bad track_id `{}`", fields[1])))?;
        let lane_id: LaneId = fields[2].parse().map_err(|_| err(format!("bad lane_id `{}`", fields[2])))?;
        let position: f64 = fields[3].parse().map_err(|_| err(format!("bad position_m `{}`", fields[3])))?;
        if !position.is_finite() {
            return Err(err("position_m must be finite".into()));
        }
        out.push(TrackObservation { frame_index, track_id, lane_id, position });
    }
    Ok(out)
}

pub fn write_tracks<W: Write>(mut w: W, observations: &[TrackObservation]) -> std::io::Result<()> {
    writeln!(w, "{TRACK_HEADER}")?;
    for o in observations {
        writeln!(w, "{},{},{},{}", o.frame_index, o.track_id, o.lane_id, o.position)?;
    }
    Ok(())
}
