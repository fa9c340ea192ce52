use std::collections::BTreeMap;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::plan::{Dwell, FlightPlan, Quantity, Setpoints, DEFAULT_STATES, MIN_DWELL};
use crate::data::{ChangePoint, LengthBounds, MultivariateSeries, StateAnnotation};
use crate::error::{Error, Result};

pub const SAMPLE_RATE_HZ: f64 = 5.0;
const DT: f64 = 1.0 / SAMPLE_RATE_HZ;
const G: f64 = 9.81;
const ROTATE_SPEED: f64 = 42.0;

/// Input channels (sensors) followed by output channels (actuators).
pub const CHANNELS: [&str; 10] = [
    "pitch", "roll", "yaw", "altitude", "airspeed", "elevator", "aileron", "rudder", "throttle", "flaps",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerGains {
    /// Throttle per m/s of airspeed error.
    pub speed_p: f64,
    pub speed_i: f64,
    /// Throttle per metre of altitude error; must be non-negative.
    pub altitude_throttle: f64,
    /// Pitch command in degrees per metre of altitude error.
    pub altitude_pitch: f64,
    pub pitch_p: f64,
    pub pitch_i: f64,
    pub roll_p: f64,
    /// Bank command in degrees per degree of heading error.
    pub heading_p: f64,
    /// Rudder per degree of bank.
    pub rudder_coordination: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            speed_p: 0.05,
            speed_i: 0.01,
            altitude_throttle: 0.002,
            altitude_pitch: 0.08,
            pitch_p: 0.05,
            pitch_i: 0.02,
            roll_p: 0.04,
            heading_p: 1.0,
            rudder_coordination: 0.015,
        }
    }
}

impl ControllerGains {
    fn validate(&self) -> Result<()> {
        let all = [
            self.speed_p,
            self.speed_i,
            self.altitude_throttle,
            self.altitude_pitch,
            self.pitch_p,
            self.pitch_i,
            self.roll_p,
            self.heading_p,
            self.rudder_coordination,
        ];
        if all.iter().any(|g| !g.is_finite()) || self.altitude_throttle < 0.0 {
            return Err(Error::InvalidConfig(format!("invalid controller gains {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Additive Gaussian noise per channel, in [`CHANNELS`] order. Sensor noise
    /// is seen by the controllers; actuator noise only by the recorder.
    pub noise_std: Vec<f64>,
    pub gains: ControllerGains,
    /// Per-state overrides of `gains`, keyed by state id.
    pub state_gains: BTreeMap<usize, ControllerGains>,
    pub sample_rate_hz: f64,
    pub seed: u64,
    pub length_bounds: LengthBounds,
    pub state_names: Vec<String>,
    /// Range of the per-flight field elevation in metres, added to the
    /// recorded altitude. Controllers work on height above the field.
    pub field_elevation: (f64, f64),
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            noise_std: vec![1.0, 2.5, 0.5, 3.0, 1.5, 0.02, 0.03, 0.02, 0.02, 0.01],
            gains: ControllerGains::default(),
            state_gains: BTreeMap::new(),
            sample_rate_hz: SAMPLE_RATE_HZ,
            seed: 0,
            length_bounds: LengthBounds::default(),
            state_names: DEFAULT_STATES.iter().map(|s| s.to_string()).collect(),
            field_elevation: (0.0, 1500.0),
        }
    }
}

impl SimConfig {
    pub fn noiseless() -> Self {
        Self {
            noise_std: vec![0.0; CHANNELS.len()],
            field_elevation: (0.0, 0.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_std.len() != CHANNELS.len() || self.noise_std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "need {} finite non-negative noise levels",
                CHANNELS.len()
            )));
        }
        if self.sample_rate_hz != SAMPLE_RATE_HZ {
            return Err(Error::InvalidConfig(format!(
                "the simulator runs at {SAMPLE_RATE_HZ} Hz, got {}",
                self.sample_rate_hz
            )));
        }
        let (lo, hi) = self.field_elevation;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidConfig(format!("invalid field elevation range {lo}..{hi}")));
        }
        if self.state_names.len() < DEFAULT_STATES.len() {
            return Err(Error::InvalidConfig(format!(
                "need at least {} state names",
                DEFAULT_STATES.len()
            )));
        }
        self.gains.validate()?;
        self.state_gains.values().try_for_each(ControllerGains::validate)
    }

    fn gains_for(&self, state: usize) -> &ControllerGains {
        self.state_gains.get(&state).unwrap_or(&self.gains)
    }
}

/// Measured sensor values as seen by the controllers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub pitch: f64,
    pub roll: f64,
    pub heading: f64,
    pub altitude: f64,
    pub airspeed: f64,
}

/// Integrator and reference values carried between control steps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerState {
    pub speed_integral: f64,
    pub pitch_integral: f64,
    pub heading_ref: f64,
}

/// Actuator commands, each in its physical range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commands {
    pub elevator: f64,
    pub aileron: f64,
    pub rudder: f64,
    pub throttle: f64,
    pub flaps: f64,
}

fn trim_pitch(flaps: f64) -> f64 {
    2.0 - 3.0 * flaps
}

/// One step of the PI control laws. Pure apart from the integrators in `ctl`.
pub fn control(sp: &Setpoints, gains: &ControllerGains, m: &Measurement, ctl: &mut ControllerState) -> Commands {
    let speed_err = sp.airspeed - m.airspeed;
    let alt_err = sp.altitude.map_or(0.0, |a| a - m.altitude);
    ctl.speed_integral = (ctl.speed_integral + speed_err * DT).clamp(-50.0, 50.0);
    let throttle = (sp.throttle_trim
        + gains.speed_p * speed_err
        + gains.speed_i * ctl.speed_integral
        + gains.altitude_throttle * alt_err)
        .clamp(0.0, 1.0);

    let pitch_target = match sp.altitude {
        Some(_) => trim_pitch(sp.flaps) + (gains.altitude_pitch * alt_err).clamp(sp.pitch_limits.0, sp.pitch_limits.1),
        None => sp.pitch,
    };
    let pitch_err = pitch_target - m.pitch;
    ctl.pitch_integral = (ctl.pitch_integral + pitch_err * DT).clamp(-20.0, 20.0);
    let elevator = (pitch_target / 30.0 + gains.pitch_p * pitch_err + gains.pitch_i * ctl.pitch_integral).clamp(-1.0, 1.0);

    let heading_hold = gains.heading_p * (ctl.heading_ref - m.heading);
    let roll_target = match (sp.roll, sp.heading_change) {
        (Some(bank), Some(_)) => heading_hold.clamp(-bank.abs(), bank.abs()),
        (Some(bank), None) => bank,
        (None, _) => heading_hold.clamp(-15.0, 15.0),
    };
    let aileron = (roll_target / 40.0 + gains.roll_p * (roll_target - m.roll)).clamp(-1.0, 1.0);
    let rudder = (gains.rudder_coordination * m.roll).clamp(-1.0, 1.0);

    Commands {
        elevator,
        aileron,
        rudder,
        throttle,
        flaps: sp.flaps,
    }
}

/// True aircraft state integrated by the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Aircraft {
    pitch: f64,
    roll: f64,
    heading: f64,
    altitude: f64,
    airspeed: f64,
    surfaces: Commands,
}

impl Aircraft {
    fn on_ground(&self) -> bool {
        self.altitude <= 0.0
    }

    fn step(&mut self, cmd: &Commands, brake: bool) {
        let lag = |x: &mut f64, target: f64, tau: f64| *x += (target - *x) * DT / tau;
        let s = &mut self.surfaces;
        lag(&mut s.elevator, cmd.elevator, 0.3);
        lag(&mut s.aileron, cmd.aileron, 0.3);
        lag(&mut s.rudder, cmd.rudder, 0.3);
        lag(&mut s.throttle, cmd.throttle, 0.5);
        lag(&mut s.flaps, cmd.flaps, 2.0);
        let s = *s;

        self.pitch += (30.0 * s.elevator - self.pitch) * DT;
        self.roll += (40.0 * s.aileron - self.roll) * DT / 0.8;
        let grounded = self.on_ground() && self.airspeed < ROTATE_SPEED;
        if grounded {
            self.pitch = self.pitch.clamp(0.0, 0.5);
            self.roll = 0.0;
        }
        let aoa_offset = 2.0 - 3.0 * s.flaps;
        let lift = (self.airspeed / ROTATE_SPEED).min(1.0).powi(2);
        let mut climb_rate = self.airspeed * ((self.pitch - aoa_offset).to_radians()).sin() * lift;
        if lift < 1.0 {
            climb_rate -= G * (1.0 - lift) * 2.0;
        }
        if self.on_ground() {
            climb_rate = climb_rate.max(0.0);
        }
        let gamma = (climb_rate / self.airspeed.max(1.0)).clamp(-1.0, 1.0).asin();
        let mut accel = 6.0 * s.throttle - 0.0006 * self.airspeed.powi(2) * (1.0 + 0.6 * s.flaps) - G * gamma.sin();
        if self.on_ground() {
            accel -= 0.3 + if brake { 2.5 } else { 0.0 };
        }
        self.airspeed = (self.airspeed + accel * DT).max(0.0);
        self.altitude += climb_rate * DT;
        if self.altitude <= 0.0 {
            self.altitude = 0.0;
            self.pitch = self.pitch.max(0.0);
        }
        let turn_rate = if self.on_ground() {
            0.0
        } else {
            (G * self.roll.to_radians().tan() / self.airspeed.max(20.0)).to_degrees()
        };
        self.heading += (turn_rate + 2.0 * s.rudder) * DT;
    }
}

fn dwell_done(dwell: &Dwell, elapsed: usize, m: &Measurement) -> bool {
    match *dwell {
        Dwell::Duration { samples } => elapsed >= samples,
        Dwell::Threshold {
            quantity,
            above,
            value,
            max_samples,
        } => {
            if elapsed < MIN_DWELL {
                return false;
            }
            if elapsed >= max_samples {
                return true;
            }
            let x = match quantity {
                Quantity::Altitude => m.altitude,
                Quantity::Airspeed => m.airspeed,
            };
            if above {
                x >= value
            } else {
                x <= value
            }
        }
    }
}

/// Simulates `plan`; the final state continues until `min_length` samples
/// exist. Returns the `l x 10` series and the state entry annotation.
pub fn generate_flight(
    plan: &FlightPlan,
    config: &SimConfig,
) -> Result<(MultivariateSeries, StateAnnotation)> {
    simulate(plan, config, config.length_bounds.min, None)
}

/// Control loop with an optional altitude measurement offset `(from, delta)`
/// added from sample `from` onward, for counterfactual checks.
pub(crate) fn simulate(
    plan: &FlightPlan,
    config: &SimConfig,
    min_length: usize,
    altitude_bias: Option<(usize, f64)>,
) -> Result<(MultivariateSeries, StateAnnotation)> {
    config.validate()?;
    plan.validate(config.state_names.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise: Vec<Normal<f64>> = config
        .noise_std
        .iter()
        .map(|&s| Normal::new(0.0, s).expect("validated noise level"))
        .collect();
    let initial_heading = 360.0 * rand::Rng::gen::<f64>(&mut rng);
    let (lo, hi) = config.field_elevation;
    let elevation = lo + (hi - lo) * rand::Rng::gen::<f64>(&mut rng);
    let mut aircraft = Aircraft {
        pitch: 0.0,
        roll: 0.0,
        heading: initial_heading,
        altitude: 0.0,
        airspeed: 0.0,
        surfaces: Commands {
            elevator: 0.0,
            aileron: 0.0,
            rudder: 0.0,
            throttle: 0.0,
            flaps: plan.steps[0].setpoints.flaps,
        },
    };
    let mut ctl = ControllerState {
        heading_ref: initial_heading,
        ..ControllerState::default()
    };
    let mut rows: Vec<[f64; 10]> = Vec::new();
    let mut entries = Vec::new();
    let max_length = config.length_bounds.max;

    for (i, step) in plan.steps.iter().enumerate() {
        let last = i + 1 == plan.steps.len();
        entries.push(ChangePoint::new(rows.len(), step.state));
        let gains = config.gains_for(step.state);
        let mut elapsed = 0;
        loop {
            if rows.len() >= max_length {
                return Err(Error::LengthExceedsTarget {
                    length: rows.len() + 1,
                    target: max_length,
                });
            }
            let mut sensed = [
                aircraft.pitch,
                aircraft.roll,
                aircraft.heading,
                aircraft.altitude,
                aircraft.airspeed,
            ];
            for (v, n) in sensed.iter_mut().zip(&noise) {
                *v += n.sample(&mut rng);
            }
            if let Some((from, delta)) = altitude_bias {
                if rows.len() >= from {
                    sensed[3] += delta;
                }
            }
            let m = Measurement {
                pitch: sensed[0],
                roll: sensed[1],
                heading: sensed[2],
                altitude: sensed[3],
                airspeed: sensed[4],
            };
            if elapsed == 0 {
                ctl.heading_ref = m.heading + step.setpoints.heading_change.unwrap_or(0.0);
            }
            let cmd = control(&step.setpoints, gains, &m, &mut ctl);
            aircraft.step(&cmd, step.setpoints.brake);
            let s = aircraft.surfaces;
            let mut row = [0.0; 10];
            row[..5].copy_from_slice(&sensed);
            row[3] += elevation;
            let outputs = [s.elevator, s.aileron, s.rudder, s.throttle, s.flaps];
            for (k, v) in outputs.into_iter().enumerate() {
                row[5 + k] = v + noise[5 + k].sample(&mut rng);
            }
            row[8] = row[8].clamp(0.0, 1.0);
            row[9] = row[9].clamp(0.0, 1.0);
            rows.push(row);
            elapsed += 1;
            if dwell_done(&step.dwell, elapsed, &m) && (!last || rows.len() >= min_length) {
                break;
            }
        }
    }

    let values = Array2::from_shape_fn((rows.len(), CHANNELS.len()), |(t, c)| rows[t][c]);
    let series = MultivariateSeries::new(
        values,
        config.sample_rate_hz,
        CHANNELS.iter().map(|s| s.to_string()).collect(),
    )?;
    let annotation = StateAnnotation::new(entries, config.state_names.len())?;
    Ok((series, annotation))
}
