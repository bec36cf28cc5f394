use serde::{Deserialize, Serialize};

use super::layer::{Layer, Mode};
use super::param::Param;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Ordered layer stack. Owns the dropout random stream so that a seeded
/// network draws identical masks on every rerun.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    mode: Mode,
    rng: Rng,
    #[serde(skip)]
    forward_cached: bool,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Network {
            layers,
            mode: Mode::Train,
            rng: Rng::new(0),
            forward_cached: false,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Restarts the dropout stream.
    pub fn seed_dropout(&mut self, seed: u64) {
        self.rng = Rng::new(seed);
    }

    pub fn dropout_rng(&self) -> &Rng {
        &self.rng
    }

    pub fn set_dropout_rng(&mut self, rng: Rng) {
        self.rng = rng;
    }

    /// Makes every dropout layer reuse its current mask.
    pub fn freeze_dropout(&mut self, frozen: bool) {
        for l in &mut self.layers {
            l.walk_mut(&mut |l| {
                if let Layer::Dropout(d) = l {
                    d.frozen = frozen;
                }
            });
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.layers
            .iter()
            .try_fold(input.to_vec(), |s, l| l.output_shape(&s))
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for l in &mut self.layers {
            h = l.forward(&h, self.mode, &mut self.rng)?;
        }
        self.forward_cached = true;
        Ok(h)
    }

    /// Backpropagates `grad` (w.r.t. the last forward's output), accumulating
    /// parameter gradients. Returns the gradient w.r.t. the input.
    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        if !self.forward_cached {
            return Err(Error::Usage("backward called without a cached forward".into()));
        }
        self.forward_cached = false;
        let mut g = grad.clone();
        for l in self.layers.iter_mut().rev() {
            g = l.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut out = Vec::new();
        self.layers.iter().for_each(|l| l.visit_params(&mut out));
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::new();
        self.layers.iter_mut().for_each(|l| l.visit_params_mut(&mut out));
        out
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    /// Number of layers with this tag, nested ones included.
    pub fn count(&self, tag: &str) -> usize {
        let mut n = 0;
        for l in &self.layers {
            l.walk(&mut |l| {
                if l.tag() == tag {
                    n += 1;
                }
            });
        }
        n
    }

    /// Top-level layer tags in order.
    pub fn tags(&self) -> Vec<&'static str> {
        self.layers.iter().map(Layer::tag).collect()
    }

    /// All layers depth-first.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&'a Layer)) {
        self.layers.iter().for_each(|l| l.walk(&mut f));
    }

    pub fn walk_mut(&mut self, mut f: impl FnMut(&mut Layer)) {
        self.layers.iter_mut().for_each(|l| l.walk_mut(&mut f));
    }

    /// Adds `factor * sum(w^2)` over conv/dense weights to the gradients
    /// (as `2 factor w`) and returns the penalty.
    pub fn apply_l2(&mut self, factor: f64) -> f64 {
        if factor == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for p in self.params_mut().into_iter().filter(|p| p.decays()) {
            total += p.value.sum_sq();
            let value = p.value.data();
            for (g, w) in p.grad.data_mut().iter_mut().zip(value) {
                *g += 2.0 * factor * w;
            }
        }
        factor * total
    }
}

/// L2 penalty `factor * sum(w^2)` over conv/dense weights, with one gradient
/// tensor per entry of [`Network::params`] (zeros for biases and batchnorm).
pub fn l2_penalty(network: &Network, factor: f64) -> (f64, Vec<Tensor>) {
    let mut loss = 0.0;
    let grads = network
        .params()
        .into_iter()
        .map(|p| {
            if p.decays() {
                loss += p.value.sum_sq();
                p.value.map(|w| 2.0 * factor * w)
            } else {
                Tensor::zeros(p.value.shape())
            }
        })
        .collect();
    (factor * loss, grads)
}
