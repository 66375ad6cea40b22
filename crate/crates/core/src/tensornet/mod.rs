//! Minimal numeric core: dense/convolution layers, activations, softmax,
//! reverse-mode gradients and Adam, sized for 2x10x10 inputs. Everything
//! is f64 and bit-reproducible given a seed.

mod adam;
mod checkpoint;
mod network;
mod tensor;


pub use adam::AdamState;
pub use checkpoint::{load_network, read_network, store_network, write_network, CheckpointError};
pub use network::{
    init_params, softmax, ForwardCache, LayerGrads, LayerParams, LayerSpec, Network, ShapeError,
};
pub use tensor::Tensor;
