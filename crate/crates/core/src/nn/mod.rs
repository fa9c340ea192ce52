//! Convolutional-recurrent sequence labeler.

pub mod adam;
pub mod checkpoint;
pub mod config;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod network;
pub mod train;

pub use adam::Adam;
pub use checkpoint::{
    load_checkpoint, predict, save_checkpoint, ModelCheckpoint, Prediction, TrainingMetadata, FORMAT_VERSION,
};
pub use config::{ArchitectureConfig, ConvSpec, Preset, TrainingConfig, Variant};
pub use loss::dice_loss;
pub use network::{parameter_shapes, ForwardPass, Network, Tensor};
pub use train::{train, train_samples, EpochRecord, TrainingHistory};
