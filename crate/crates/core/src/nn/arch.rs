//! Architecture constructors: the depth-sweep CNN family, VGG-13 and ResNet-9.

use super::batchnorm::BatchNorm2d;
use super::conv::Conv2d;
use super::dense::Dense;
use super::dropout::Dropout;
use super::layer::{Activation, Flatten, Layer, ResidualGroup};
use super::network::Network;
use super::pool::MaxPool2d;
use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Dropout rate used by the depth-sweep family.
pub const SWEEP_DROPOUT: f64 = 0.25;
/// The depth-sweep family pools after this many leading blocks at most.
pub const SWEEP_POOLS: usize = 4;
const SWEEP_WIDTHS: [usize; 4] = [32, 64, 128, 128];

fn scaled(channels: usize, width_mult: f64) -> usize {
    ((channels as f64 * width_mult).round() as usize).max(1)
}

fn conv_bn_act(cin: usize, cout: usize, act: ActivationKind, rng: &mut Rng) -> [Layer; 3] {
    [
        Layer::Conv2d(Conv2d::new(cin, cout, 3, rng)),
        Layer::BatchNorm2d(BatchNorm2d::new(cout)),
        Layer::Activation(Activation::new(act)),
    ]
}

fn finish(layers: Vec<Layer>, rng: &mut Rng) -> Network {
    let mut net = Network::new(layers);
    net.seed_dropout(rng.next_u64());
    net
}

/// `n_conv` blocks of conv3x3 -> batchnorm -> activation on a 1x28x28 input,
/// with 2x2 max-pooling and dropout(0.25) after each of the first four blocks,
/// widths 32, 64, 128, 128, 128, ..., and a final flatten -> dense(10).
pub fn build_depth_sweep_cnn(n_conv: usize, act: ActivationKind, rng: &mut Rng) -> Result<Network> {
    build_depth_sweep_cnn_for(n_conv, act, [1, 28, 28], 10, rng)
}

/// [`build_depth_sweep_cnn`] for another input geometry.
pub fn build_depth_sweep_cnn_for(
    n_conv: usize,
    act: ActivationKind,
    input: [usize; 3],
    n_classes: usize,
    rng: &mut Rng,
) -> Result<Network> {
    if n_conv < 1 {
        return Err(Error::argument("depth-sweep network needs at least one conv layer"));
    }
    let [mut c, mut h, mut w] = input;
    let mut layers = Vec::new();
    for block in 0..n_conv {
        let width = SWEEP_WIDTHS.get(block).copied().unwrap_or(128);
        layers.extend(conv_bn_act(c, width, act, rng));
        c = width;
        if block < SWEEP_POOLS {
            layers.push(Layer::MaxPool2d(MaxPool2d::new(2)));
            layers.push(Layer::Dropout(Dropout::new(SWEEP_DROPOUT)?));
            h = h.div_ceil(2);
            w = w.div_ceil(2);
        }
    }
    layers.push(Layer::Flatten(Flatten::default()));
    layers.push(Layer::Dense(Dense::new(c * h * w, n_classes, rng)));
    Ok(finish(layers, rng))
}

/// The eight-conv member of the depth-sweep family.
pub fn build_small_cnn8(act: ActivationKind, rng: &mut Rng) -> Network {
    build_depth_sweep_cnn(8, act, rng).expect("eight blocks is a valid depth")
}

/// VGG-13 for 32x32 inputs: conv stages 64,64 | 128,128 | 256,256 |
/// 512,512 | 512,512 (each conv followed by batchnorm and the activation,
/// each stage by 2x2 max-pooling), then dense 4096 -> 4096 -> classes.
/// Every width is multiplied by `width_mult`.
pub fn build_vgg13(
    act: ActivationKind,
    in_channels: usize,
    n_classes: usize,
    width_mult: f64,
    rng: &mut Rng,
) -> Result<Network> {
    check_width(width_mult)?;
    let stages = [64, 128, 256, 512, 512];
    let mut layers = Vec::new();
    let mut c = in_channels;
    for stage in stages {
        let out = scaled(stage, width_mult);
        layers.extend(conv_bn_act(c, out, act, rng));
        layers.extend(conv_bn_act(out, out, act, rng));
        layers.push(Layer::MaxPool2d(MaxPool2d::new(2)));
        c = out;
    }
    let hidden = scaled(4096, width_mult);
    layers.push(Layer::Flatten(Flatten::default()));
    layers.push(Layer::Dense(Dense::new(c, hidden, rng)));
    layers.push(Layer::Activation(Activation::new(act)));
    layers.push(Layer::Dense(Dense::new(hidden, hidden, rng)));
    layers.push(Layer::Activation(Activation::new(act)));
    layers.push(Layer::Dense(Dense::new(hidden, n_classes, rng)));
    Ok(finish(layers, rng))
}

/// ResNet-9 for 32x32 inputs: conv64 -> conv128+pool -> residual(128, 128)
/// -> conv256+pool -> conv512+pool -> residual(512, 512) -> 4x4 max-pool ->
/// dense. Each conv is conv3x3 -> batchnorm -> activation; widths scale with
/// `width_mult`.
pub fn build_resnet9(
    act: ActivationKind,
    in_channels: usize,
    n_classes: usize,
    width_mult: f64,
    rng: &mut Rng,
) -> Result<Network> {
    check_width(width_mult)?;
    let [c64, c128, c256, c512] = [64, 128, 256, 512].map(|c| scaled(c, width_mult));
    let mut layers = Vec::new();
    layers.extend(conv_bn_act(in_channels, c64, act, rng));
    layers.extend(conv_bn_act(c64, c128, act, rng));
    layers.push(Layer::MaxPool2d(MaxPool2d::new(2)));
    layers.push(residual(c128, act, rng));
    layers.extend(conv_bn_act(c128, c256, act, rng));
    layers.push(Layer::MaxPool2d(MaxPool2d::new(2)));
    layers.extend(conv_bn_act(c256, c512, act, rng));
    layers.push(Layer::MaxPool2d(MaxPool2d::new(2)));
    layers.push(residual(c512, act, rng));
    layers.push(Layer::MaxPool2d(MaxPool2d::new(4)));
    layers.push(Layer::Flatten(Flatten::default()));
    layers.push(Layer::Dense(Dense::new(c512, n_classes, rng)));
    Ok(finish(layers, rng))
}

fn residual(c: usize, act: ActivationKind, rng: &mut Rng) -> Layer {
    let mut layers = Vec::with_capacity(6);
    layers.extend(conv_bn_act(c, c, act, rng));
    layers.extend(conv_bn_act(c, c, act, rng));
    Layer::ResidualGroup(ResidualGroup { layers })
}

fn check_width(width_mult: f64) -> Result<()> {
    if width_mult > 0.0 && width_mult.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!("width multiplier must be > 0, got {width_mult}")))
    }
}
