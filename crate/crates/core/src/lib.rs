//! Black-box state inference for control systems.
//!
//! Given the recorded inputs and outputs of a controller over time, the crate
//! locates state changes and labels every timestep with the controller's
//! internal state. It contains:
//!
//! * [`data`]: series, annotations, label encoding, padding, normalization, file formats
//! * [`cpd`]: classical offline change point detection (bottom-up and window search)
//! * [`nn`]: a from-scratch convolutional-recurrent sequence labeler trained with Adam
//! * [`baseline`]: the sliding-window ridge classifier
//! * [`metrics`]: tolerance-margin change point scores, macro classification scores, state strips
//! * [`sim`]: a synthetic autopilot that produces labeled flights
//! * [`cli`]: the `stateinfer` command-line pipeline

pub mod data;
pub mod error;

pub use error::{Error, Result};
pub mod cpd;
pub mod nn;
pub mod sim;
pub mod baseline;
pub mod metrics;
pub mod pipeline;
pub mod cli;
