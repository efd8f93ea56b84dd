//! Hiding speech inside images with jointly trained prepare, hide, and
//! reveal convolutional networks, plus the signal processing, metrics, and
//! LSB baseline around them.

pub mod audio;
pub mod cli;
pub mod codec;
pub mod config;
pub mod error;
pub mod image_io;
pub mod lsb;
pub mod metrics;
pub mod net;
pub mod pipeline;
pub mod spectral;
pub mod synth;
pub mod tensor;
pub mod training;

pub use audio::AudioClip;
pub use codec::{Method, SecretCodec};
pub use error::{Result, StegoError};
pub use net::{Architecture, StegoNet};
pub use spectral::StftParams;
pub use tensor::{PlanarTensor, Real};
pub use training::{LossWeights, TrainConfig, Trainer};
