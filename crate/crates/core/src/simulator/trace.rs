use std::io::Write;

use serde::{Deserialize, Serialize};

/// Speed samples of every vehicle at a fixed recording interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedTrace {
    /// s
    pub interval: f64,
    /// `samples[vehicle_id][k]` is the speed in m/s at `(k + 1) * interval`.
    pub samples: Vec<Vec<f64>>,
}

impl SpeedTrace {
    pub const CSV_HEADER: &'static str = "time_s,vehicle_id,speed_mps";

    pub fn new(interval: f64, vehicles: usize) -> Self {
        Self { interval, samples: vec![Vec::new(); vehicles] }
    }

    /// Appends one sample per vehicle, in vehicle-id order.
    pub fn record(&mut self, speeds: impl IntoIterator<Item = f64>) {
        let mut n = 0;
        for (row, v) in self.samples.iter_mut().zip(speeds) {
            row.push(v);
            n += 1;
        }
        debug_assert_eq!(n, self.samples.len());
    }

    pub fn vehicles(&self) -> usize {
        self.samples.len()
    }

    /// Samples per vehicle.
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0 || self.vehicles() == 0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for k in 0..self.len() {
            let t = (k + 1) as f64 * self.interval;
            for (id, row) in self.samples.iter().enumerate() {
                writeln!(w, "{t:.1},{id},{}", row[k])?;
            }
        }
        Ok(())
    }
}
