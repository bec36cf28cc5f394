//! Dense/convolutional layers with exact backpropagation.

mod arch;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod io;
mod layer;
mod linalg;
mod loss;
mod network;
mod param;
mod pool;

pub use arch::{
    build_depth_sweep_cnn, build_depth_sweep_cnn_for, build_resnet9, build_small_cnn8,
    build_vgg13, SWEEP_DROPOUT,
};
pub use batchnorm::{BatchNorm2d, BN_EPS, BN_MOMENTUM};
pub use conv::Conv2d;
pub use dense::Dense;
pub use dropout::Dropout;
pub use io::{flatten_state, load_parameters, save_parameters};
pub use layer::{Activation, Flatten, Layer, Mode, ResidualGroup};
pub use loss::{cross_entropy_per_sample, softmax_cross_entropy};
pub use network::{l2_penalty, Network};
pub use param::{Param, ParamRole};
pub use pool::MaxPool2d;
