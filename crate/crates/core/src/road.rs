//! Identifiers shared by the sensing, control and simulation layers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the two conflicting roads through the intersection.
///
/// Road A is the left ring, road B the right ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Road {
    A,
    B,
}

impl Road {
    pub const BOTH: [Road; 2] = [Road::A, Road::B];

    pub fn index(self) -> usize {
        match self {
            Road::A => 0,
            Road::B => 1,
        }
    }

    pub fn other(self) -> Road {
        match self {
            Road::A => Road::B,
            Road::B => Road::A,
        }
    }

    /// The two directional approach lanes of this road.
    pub fn lanes(self) -> [LaneId; 2] {
        let base = 2 * self.index() as u32;
        [LaneId(base), LaneId(base + 1)]
    }
}

impl fmt::Display for Road {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Road::A => "A",
            Road::B => "B",
        })
    }
}

impl FromStr for Road {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Road::A),
            "B" | "b" => Ok(Road::B),
            other => Err(format!("unknown road `{other}`")),
        }
    }
}

/// Approach lane identifier.
///
/// In the simulated world lanes 0 and 1 belong to road A (clockwise,
/// counter-clockwise) and lanes 2 and 3 to road B. Track files may use any
/// non-negative integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneId(pub u32);

impl LaneId {
    pub const ALL: [LaneId; 4] = [LaneId(0), LaneId(1), LaneId(2), LaneId(3)];

    /// Road owning this lane in the simulated world.
    pub fn road(self) -> Road {
        if self.0 < 2 {
            Road::A
        } else {
            Road::B
        }
    }

    pub fn is_clockwise(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for LaneId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(LaneId)
    }
}
