#![allow(dead_code)]

use colu_core::activation::ActivationKind;
use colu_core::nn::{
    softmax_cross_entropy, Activation, BatchNorm2d, Conv2d, Dense, Dropout, Flatten, Layer,
    MaxPool2d, Mode, Network,
};
use colu_core::{Rng, Tensor};

/// Double-double arithmetic (about 106 bits), used as an oracle that shares
/// no code with the library's f64 formulas.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

impl Dd {
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let v = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(v.hi, v.lo + t.lo)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2).add(Dd::from(q3))
    }

    pub fn mul_pow2(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    /// e^x by x = k ln2 + r, |r| <= ln2/2, r scaled by 2^-10, Taylor series,
    /// then squared ten times.
    pub fn exp(self) -> Dd {
        const LN2: Dd = Dd {
            hi: std::f64::consts::LN_2,
            lo: 2.319046813846299558e-17,
        };
        let k = (self.hi / LN2.hi).round();
        let r = self.sub(LN2.mul(Dd::from(k))).mul_pow2(-10);
        let mut term = Dd::from(1.0);
        let mut sum = Dd::from(1.0);
        for i in 1..30 {
            term = term.mul(r).div(Dd::from(i as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum.mul(sum);
        }
        sum.mul_pow2(k as i32)
    }
}

/// CoLU in double-double: x / (1 - x e^{-(x + e^x)}).
pub fn colu_dd(x: f64) -> f64 {
    let xd = Dd::from(x);
    let inner = xd.add(xd.exp()).neg().exp();
    xd.div(Dd::from(1.0).sub(xd.mul(inner))).to_f64()
}

/// Swish in double-double: x / (1 + e^{-x}).
pub fn swish_dd(x: f64) -> f64 {
    let xd = Dd::from(x);
    xd.div(Dd::from(1.0).add(xd.neg().exp())).to_f64()
}

/// Distance in units in the last place between two finite doubles.
pub fn ulps(a: f64, b: f64) -> u64 {
    let key = |v: f64| {
        let bits = v.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

pub fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).unwrap()
}

/// `|a - b| / max(|a|, |b|, floor)`. The floor is the magnitude below which
/// central differences cannot resolve the gradient to the tolerance, so tiny
/// entries are compared on an absolute scale instead.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Probe losses `sum(y * r)` keep gradients O(1).
const LAYER_FLOOR: f64 = 1e-8;
/// A cross-entropy loss of about 2.3 differenced at h = 1e-5 carries
/// roundoff near 1e-9; entries under 1e-5 are checked to 1e-9 absolute.
const NET_FLOOR: f64 = 1e-5;

/// Worst relative error between a layer's backward pass and central
/// differences of `sum(forward(x) * probe)` with respect to the input and
/// every parameter of the layer.
pub fn layer_gradcheck(layer: &mut Layer, x: &Tensor, mode: Mode, h: f64) -> f64 {
    let mut rng = Rng::new(99);
    let drop_rng = Rng::new(5);
    let y = layer.forward(x, mode, &mut drop_rng.clone()).unwrap();
    let probe = random_tensor(y.shape(), &mut rng);
    let mut params = Vec::new();
    zero_layer_grads(layer);
    let dx = layer.backward(&probe).unwrap();
    layer_params(layer, &mut params);

    let loss = |layer: &mut Layer, x: &Tensor| -> f64 {
        let y = layer.forward(x, mode, &mut drop_rng.clone()).unwrap();
        y.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum()
    };
    let mut worst: f64 = 0.0;
    let mut xp = x.clone();
    for i in 0..x.len() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + h;
        let up = loss(layer, &xp);
        xp.data_mut()[i] = orig - h;
        let down = loss(layer, &xp);
        xp.data_mut()[i] = orig;
        worst = worst.max(rel_err(dx.data()[i], (up - down) / (2.0 * h), LAYER_FLOOR));
    }
    for (p, grad) in params.iter().enumerate() {
        for i in 0..grad.len() {
            let orig = param_value(layer, p, i);
            set_param_value(layer, p, i, orig + h);
            let up = loss(layer, x);
            set_param_value(layer, p, i, orig - h);
            let down = loss(layer, x);
            set_param_value(layer, p, i, orig);
            worst = worst.max(rel_err(grad.data()[i], (up - down) / (2.0 * h), LAYER_FLOOR));
        }
    }
    worst
}

fn zero_layer_grads(layer: &mut Layer) {
    match layer {
        Layer::Conv2d(l) => {
            l.weight.zero_grad();
            l.bias.zero_grad();
        }
        Layer::Dense(l) => {
            l.weight.zero_grad();
            l.bias.zero_grad();
        }
        Layer::BatchNorm2d(l) => {
            l.gamma.zero_grad();
            l.beta.zero_grad();
        }
        _ => {}
    }
}

fn layer_params(layer: &Layer, out: &mut Vec<Tensor>) {
    match layer {
        Layer::Conv2d(l) => out.extend([l.weight.grad.clone(), l.bias.grad.clone()]),
        Layer::Dense(l) => out.extend([l.weight.grad.clone(), l.bias.grad.clone()]),
        Layer::BatchNorm2d(l) => out.extend([l.gamma.grad.clone(), l.beta.grad.clone()]),
        _ => {}
    }
}

fn param_slot(layer: &mut Layer, p: usize) -> &mut Tensor {
    match (layer, p) {
        (Layer::Conv2d(l), 0) => &mut l.weight.value,
        (Layer::Conv2d(l), 1) => &mut l.bias.value,
        (Layer::Dense(l), 0) => &mut l.weight.value,
        (Layer::Dense(l), 1) => &mut l.bias.value,
        (Layer::BatchNorm2d(l), 0) => &mut l.gamma.value,
        (Layer::BatchNorm2d(l), 1) => &mut l.beta.value,
        _ => unreachable!(),
    }
}

fn param_value(layer: &mut Layer, p: usize, i: usize) -> f64 {
    param_slot(layer, p).data()[i]
}

fn set_param_value(layer: &mut Layer, p: usize, i: usize, v: f64) {
    param_slot(layer, p).data_mut()[i] = v;
}

/// Network-level check of the cross-entropy gradient. At most `per_tensor`
/// entries of each parameter tensor (and of the input) are probed, chosen
/// by a seeded draw; `usize::MAX` checks everything. Dropout masks must be
/// frozen by the caller.
pub fn network_gradcheck(
    net: &mut Network,
    x: &Tensor,
    labels: &[usize],
    h: f64,
    per_tensor: usize,
) -> f64 {
    net.zero_grad();
    let logits = net.forward(x).unwrap();
    let (_, g) = softmax_cross_entropy(&logits, labels).unwrap();
    let dx = net.backward(&g).unwrap();
    let grads: Vec<Tensor> = net.params().iter().map(|p| p.grad.clone()).collect();

    let loss = |net: &mut Network, x: &Tensor| -> f64 {
        let logits = net.forward(x).unwrap();
        softmax_cross_entropy(&logits, labels).unwrap().0
    };
    let mut pick = Rng::new(2024);
    let mut indices = |n: usize| -> Vec<usize> {
        if n <= per_tensor {
            (0..n).collect()
        } else {
            (0..per_tensor).map(|_| pick.index(n)).collect()
        }
    };

    let mut worst: f64 = 0.0;
    let mut xp = x.clone();
    for i in indices(x.len()) {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + h;
        let up = loss(net, &xp);
        xp.data_mut()[i] = orig - h;
        let down = loss(net, &xp);
        xp.data_mut()[i] = orig;
        worst = worst.max(rel_err(dx.data()[i], (up - down) / (2.0 * h), NET_FLOOR));
    }
    for (p, grad) in grads.iter().enumerate() {
        for i in indices(grad.len()) {
            let orig = net.params()[p].value.data()[i];
            net.params_mut()[p].value.data_mut()[i] = orig + h;
            let up = loss(net, x);
            net.params_mut()[p].value.data_mut()[i] = orig - h;
            let down = loss(net, x);
            net.params_mut()[p].value.data_mut()[i] = orig;
            worst = worst.max(rel_err(grad.data()[i], (up - down) / (2.0 * h), NET_FLOOR));
        }
    }
    worst
}

/// Runs one train-mode forward so every dropout layer has drawn a mask, then
/// freezes the masks.
pub fn freeze_masks(net: &mut Network, x: &Tensor) {
    net.set_mode(Mode::Train);
    net.forward(x).unwrap();
    net.freeze_dropout(true);
}

/// MNIST directory from `COLU_MNIST_DIR`, else `<workspace>/data/mnist`;
/// `None` when the t10k files are absent.
pub fn mnist_dir() -> Option<std::path::PathBuf> {
    let dir = std::env::var_os("COLU_MNIST_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| {
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
        });
    ["t10k-images-idx3-ubyte", "t10k-images-idx3-ubyte.gz"]
        .iter()
        .any(|f| dir.join(f).is_file())
        .then_some(dir)
}

/// conv -> BN -> act -> pool -> dropout, twice, then dense, on 1x8x8 input.
pub fn two_conv_net(kind: ActivationKind, seed: u64) -> Network {
    let mut rng = Rng::new(seed);
    let mut layers = Vec::new();
    for (cin, cout) in [(1, 3), (3, 4)] {
        layers.push(Layer::Conv2d(Conv2d::new(cin, cout, 3, &mut rng)));
        layers.push(Layer::BatchNorm2d(BatchNorm2d::new(cout)));
        layers.push(Layer::Activation(Activation::new(kind)));
        layers.push(Layer::MaxPool2d(MaxPool2d::new(2)));
        layers.push(Layer::Dropout(Dropout::new(0.25).unwrap()));
    }
    layers.push(Layer::Flatten(Flatten::default()));
    layers.push(Layer::Dense(Dense::new(16, 10, &mut rng)));
    let mut net = Network::new(layers);
    net.seed_dropout(seed + 1);
    net
}
