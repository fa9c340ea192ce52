use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default state vocabulary; ids are indices into this list.
pub const DEFAULT_STATES: [&str; 9] = [
    "accelerate",
    "takeoff",
    "climb",
    "cruise",
    "turn_left",
    "turn_right",
    "descend",
    "approach",
    "land",
];

pub const ACCELERATE: usize = 0;
pub const TAKEOFF: usize = 1;
pub const CLIMB: usize = 2;
pub const CRUISE: usize = 3;
pub const TURN_LEFT: usize = 4;
pub const TURN_RIGHT: usize = 5;
pub const DESCEND: usize = 6;
pub const APPROACH: usize = 7;
pub const LAND: usize = 8;

pub const MIN_DWELL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Altitude,
    Airspeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Dwell {
    /// Stay for exactly this many samples.
    Duration { samples: usize },
    /// Stay until the measured quantity crosses `value` (upward if `above`),
    /// but at least the minimum dwell and at most `max_samples`.
    Threshold {
        quantity: Quantity,
        above: bool,
        value: f64,
        max_samples: usize,
    },
}

/// What the controllers aim for while a state is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoints {
    pub airspeed: f64,
    /// Throttle feed-forward term.
    pub throttle_trim: f64,
    /// Altitude to hold or reach; `None` leaves pitch to `pitch`.
    pub altitude: Option<f64>,
    /// Fixed pitch attitude in degrees, used when `altitude` is `None`.
    pub pitch: f64,
    /// Pitch command limits in degrees for altitude tracking.
    pub pitch_limits: (f64, f64),
    /// Bank angle in degrees; `None` holds the heading at state entry.
    pub roll: Option<f64>,
    /// Heading change in degrees to capture. With `roll` set, the bank is
    /// held until the new heading is near and then rolled out; the state
    /// continues wings-level until its dwell ends.
    #[serde(default)]
    pub heading_change: Option<f64>,
    pub flaps: f64,
    /// Wheel brakes engaged.
    pub brake: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub state: usize,
    pub setpoints: Setpoints,
    pub dwell: Dwell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub steps: Vec<PlanStep>,
}

impl FlightPlan {
    /// Checks the plan against a vocabulary of `num_states` states.
    pub fn validate(&self, num_states: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPlan(m));
        let (Some(first), Some(last)) = (self.steps.first(), self.steps.last()) else {
            return bad("plan is empty".into());
        };
        if first.state != ACCELERATE {
            return bad(format!("plan must begin with state {ACCELERATE}, got {}", first.state));
        }
        if last.state != LAND {
            return bad(format!("plan must end with the land state, got {}", last.state));
        }
        for (i, step) in self.steps.iter().enumerate() {
            if step.state >= num_states {
                return bad(format!("step {i}: state {} out of range", step.state));
            }
            if i > 0 && self.steps[i - 1].state == step.state {
                return bad(format!("step {i}: repeats state {}", step.state));
            }
            match step.dwell {
                Dwell::Duration { samples } if samples < MIN_DWELL => {
                    return bad(format!("step {i}: dwell {samples} < {MIN_DWELL}"))
                }
                Dwell::Threshold { max_samples, value, .. }
                    if max_samples < MIN_DWELL || !value.is_finite() =>
                {
                    return bad(format!("step {i}: invalid threshold dwell"))
                }
                _ => {}
            }
            let s = step.setpoints;
            let finite = [s.airspeed, s.throttle_trim, s.pitch, s.pitch_limits.0, s.pitch_limits.1, s.flaps]
                .iter()
                .chain(s.altitude.iter())
                .chain(s.roll.iter())
                .chain(s.heading_change.iter())
                .all(|v| v.is_finite());
            if !finite || !(0.0..=1.0).contains(&s.flaps) || s.pitch_limits.0 > s.pitch_limits.1 {
                return bad(format!("step {i}: invalid setpoints"));
            }
        }
        Ok(())
    }

    pub fn states(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.state).collect()
    }
}

/// Setpoints for each default state; `altitude` and `roll` are filled in by the
/// plan builder where they vary.
pub fn default_setpoints(state: usize) -> Setpoints {
    let base = Setpoints {
        airspeed: 75.0,
        throttle_trim: 0.55,
        altitude: None,
        pitch: 0.0,
        pitch_limits: (-5.0, 5.0),
        roll: None,
        heading_change: None,
        flaps: 0.0,
        brake: false,
    };
    match state {
        ACCELERATE => Setpoints {
            airspeed: 60.0,
            throttle_trim: 1.0,
            flaps: 0.5,
            ..base
        },
        TAKEOFF => Setpoints {
            airspeed: 60.0,
            throttle_trim: 1.0,
            pitch: 9.0,
            flaps: 0.5,
            ..base
        },
        CLIMB => Setpoints {
            airspeed: 68.0,
            throttle_trim: 0.85,
            pitch_limits: (3.0, 12.0),
            ..base
        },
        CRUISE => Setpoints {
            airspeed: 80.0,
            throttle_trim: 0.6,
            ..base
        },
        TURN_LEFT => Setpoints {
            airspeed: 75.0,
            roll: Some(-25.0),
            ..base
        },
        TURN_RIGHT => Setpoints {
            airspeed: 75.0,
            roll: Some(25.0),
            ..base
        },
        DESCEND => Setpoints {
            airspeed: 78.0,
            throttle_trim: 0.25,
            pitch_limits: (-7.0, -1.0),
            ..base
        },
        APPROACH => Setpoints {
            airspeed: 55.0,
            throttle_trim: 0.35,
            pitch: -5.0,
            flaps: 1.0,
            ..base
        },
        _ => Setpoints {
            airspeed: 0.0,
            throttle_trim: 0.0,
            pitch: -2.0,
            flaps: 1.0,
            brake: true,
            ..base
        },
    }
}
