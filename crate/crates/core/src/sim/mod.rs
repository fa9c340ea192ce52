//! Synthetic autopilot flights with ground-truth state annotations.
//!
//! A flight plan is a sequence of states with setpoints and dwell conditions.
//! Proportional-integral controllers track the setpoints from noisy sensor
//! readings and a point-mass model integrates the resulting actuator commands
//! at 5 Hz.

mod generate;
mod physics;
mod plan;

pub use generate::{generate_dataset, random_plan, PlanProfile, Profile};
pub use physics::{
    control, generate_flight, Commands, ControllerGains, ControllerState, Measurement, SimConfig, CHANNELS,
    SAMPLE_RATE_HZ,
};
pub use plan::{
    default_setpoints, Dwell, FlightPlan, PlanStep, Quantity, Setpoints, ACCELERATE, APPROACH, CLIMB, CRUISE,
    DEFAULT_STATES, DESCEND, LAND, MIN_DWELL, TAKEOFF, TURN_LEFT, TURN_RIGHT,
};
