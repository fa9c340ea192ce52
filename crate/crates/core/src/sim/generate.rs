use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::physics::{generate_flight, SimConfig, CHANNELS, SAMPLE_RATE_HZ};
use super::plan::*;
use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};

const MAX_ATTEMPTS: usize = 50;

/// Ranges the plan randomizer draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanProfile {
    pub altitude: (f64, f64),
    /// Middle-section block counts for the short and long templates.
    pub short_blocks: (usize, usize),
    pub long_blocks: (usize, usize),
    pub long_probability: f64,
    pub cruise_samples: (usize, usize),
    /// Wings-level samples after a turn has captured its heading.
    pub turn_samples: (usize, usize),
    pub land_samples: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Desk,
    PaperScale,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper-scale" | "paper" => Ok(Profile::PaperScale),
            other => Err(Error::InvalidConfig(format!("unknown profile `{other}`"))),
        }
    }
}

impl Profile {
    pub fn plan_profile(self) -> PlanProfile {
        match self {
            // Mostly a few hundred samples per flight so that training fits a CPU budget.
            Profile::Desk => PlanProfile {
                altitude: (120.0, 350.0),
                short_blocks: (2, 4),
                long_blocks: (5, 8),
                long_probability: 0.25,
                cruise_samples: (20, 100),
                turn_samples: (5, 50),
                land_samples: (60, 150),
            },
            // Bimodal: short hops and long multi-leg flights.
            Profile::PaperScale => PlanProfile {
                altitude: (600.0, 3000.0),
                short_blocks: (3, 6),
                long_blocks: (20, 40),
                long_probability: 0.5,
                cruise_samples: (100, 1500),
                turn_samples: (10, 200),
                land_samples: (150, 400),
            },
        }
    }
}

fn threshold(quantity: Quantity, above: bool, value: f64, max_samples: usize) -> Dwell {
    Dwell::Threshold {
        quantity,
        above,
        value,
        max_samples,
    }
}

/// Default setpoints with per-step variation in speed, bank and pitch limits.
fn varied(state: usize, altitude: Option<f64>, rng: &mut impl Rng) -> Setpoints {
    let mut sp = default_setpoints(state);
    sp.altitude = altitude;
    match state {
        CRUISE => sp.airspeed = rng.gen_range(70.0..86.0),
        TURN_LEFT | TURN_RIGHT => {
            let sign = if state == TURN_LEFT { -1.0 } else { 1.0 };
            sp.roll = Some(sign * rng.gen_range(15.0..30.0));
            sp.heading_change = Some(sign * rng.gen_range(20.0..100.0));
            sp.airspeed = rng.gen_range(68.0..82.0);
        }
        CLIMB => {
            sp.airspeed = rng.gen_range(62.0..76.0);
            sp.pitch_limits.1 = rng.gen_range(6.0..12.0);
        }
        DESCEND => {
            sp.airspeed = rng.gen_range(70.0..84.0);
            sp.pitch_limits.0 = rng.gen_range(-7.0..-3.0);
        }
        _ => {}
    }
    sp
}

fn step(state: usize, setpoints: Setpoints, dwell: Dwell) -> PlanStep {
    PlanStep {
        state,
        setpoints,
        dwell,
    }
}

/// Draws a plan: ground roll, takeoff, climb, a random middle section of
/// cruise, turns and altitude changes, then descent, approach and landing.
pub fn random_plan(profile: &PlanProfile, rng: &mut impl Rng) -> FlightPlan {
    let (lo, hi) = profile.altitude;
    let mut steps = vec![
        step(
            ACCELERATE,
            default_setpoints(ACCELERATE),
            threshold(Quantity::Airspeed, true, 45.0, 400),
        ),
        step(
            TAKEOFF,
            default_setpoints(TAKEOFF),
            threshold(Quantity::Altitude, true, rng.gen_range(25.0..60.0), 400),
        ),
    ];
    let mut altitude = rng.gen_range(lo..hi);
    steps.push(step(
        CLIMB,
        varied(CLIMB, Some(altitude), rng),
        threshold(Quantity::Altitude, true, altitude - 15.0, 3000),
    ));

    let blocks = if rng.gen_bool(profile.long_probability) {
        rng.gen_range(profile.long_blocks.0..=profile.long_blocks.1)
    } else {
        rng.gen_range(profile.short_blocks.0..=profile.short_blocks.1)
    };
    let mut previous = CLIMB;
    for b in 0..blocks {
        let mut options = vec![CRUISE, TURN_LEFT, TURN_RIGHT, CLIMB, DESCEND];
        options.retain(|&s| s != previous && !(b + 1 == blocks && s == DESCEND));
        if altitude > hi * 1.3 {
            options.retain(|&s| s != CLIMB);
        }
        if altitude < lo + 100.0 {
            options.retain(|&s| s != DESCEND);
        }
        let state = *options.choose(rng).expect("at least the level states remain");
        let next = match state {
            CRUISE => step(
                CRUISE,
                varied(CRUISE, Some(altitude), rng),
                Dwell::Duration {
                    samples: rng.gen_range(profile.cruise_samples.0..=profile.cruise_samples.1),
                },
            ),
            TURN_LEFT | TURN_RIGHT => {
                let sp = varied(state, Some(altitude), rng);
                let rate = (9.81 * sp.roll.unwrap().abs().to_radians().tan() / sp.airspeed).to_degrees();
                let turn = sp.heading_change.unwrap().abs() / rate * SAMPLE_RATE_HZ;
                let tail = rng.gen_range(profile.turn_samples.0..=profile.turn_samples.1);
                step(state, sp, Dwell::Duration { samples: turn as usize + 15 + tail })
            }
            CLIMB => {
                altitude += rng.gen_range(80.0..300.0);
                step(
                    CLIMB,
                    varied(CLIMB, Some(altitude), rng),
                    threshold(Quantity::Altitude, true, altitude - 15.0, 3000),
                )
            }
            _ => {
                altitude = (altitude - rng.gen_range(80.0..250.0)).max(lo);
                step(
                    DESCEND,
                    varied(DESCEND, Some(altitude), rng),
                    threshold(Quantity::Altitude, false, altitude + 15.0, 3000),
                )
            }
        };
        steps.push(next);
        previous = state;
    }

    let pattern = rng.gen_range(70.0..130.0);
    steps.push(step(
        DESCEND,
        varied(DESCEND, Some(pattern), rng),
        threshold(Quantity::Altitude, false, pattern + 15.0, 3000),
    ));
    steps.push(step(
        APPROACH,
        default_setpoints(APPROACH),
        threshold(Quantity::Altitude, false, 8.0, 3000),
    ));
    steps.push(step(
        LAND,
        default_setpoints(LAND),
        Dwell::Duration {
            samples: rng.gen_range(profile.land_samples.0..=profile.land_samples.1),
        },
    ));
    FlightPlan { steps }
}

/// Generates `num_flights` labeled flights. Flight `i` depends only on
/// `(seed, i)` and `config`, so flights are produced in parallel.
pub fn generate_dataset(num_flights: usize, config: &SimConfig, profile: &PlanProfile, seed: u64) -> Result<Dataset> {
    if num_flights == 0 {
        return Err(Error::InvalidConfig("need at least one flight".into()));
    }
    config.validate()?;
    let samples = (0..num_flights)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for _ in 0..MAX_ATTEMPTS {
                let plan = random_plan(profile, &mut rng);
                let flight_config = SimConfig {
                    seed: rng.gen(),
                    ..config.clone()
                };
                match generate_flight(&plan, &flight_config) {
                    Ok((series, annotation)) => {
                        return Ok(Sample {
                            id: format!("flight_{i:05}"),
                            series,
                            annotation: Some(annotation),
                            split: None,
                        })
                    }
                    Err(Error::LengthExceedsTarget { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::InvalidConfig(format!(
                "flight {i}: no plan fit the length bounds in {MAX_ATTEMPTS} attempts"
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        samples,
        state_names: config.state_names.clone(),
        channel_names: CHANNELS.iter().map(|s| s.to_string()).collect(),
        sample_rate_hz: config.sample_rate_hz,
    })
}
