//! Prepare, hiding and reveal convolutional networks, their reverse-mode
//! gradients, and the binary weight format.

mod base;
mod conv;
mod stegonet;
mod weights;

pub use base::{BaseModel, NetworkConfig, OutputActivation, BRANCH_DEPTH, KERNEL_SIZES};
pub use conv::Conv2d;
pub use stegonet::{Architecture, StegoNet, StegoOutputs, Tape};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WEIGHTS_MAGIC};
