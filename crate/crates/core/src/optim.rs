//! SGD with classical momentum and iteration-indexed learning-rate decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Param;
use crate::tensor::Tensor;

/// How the `decay` coefficient is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// `lr_t = lr0 / (1 + decay t)`.
    #[default]
    LrDecay,
    /// Constant learning rate; `decay * w` is added to each weight gradient.
    WeightDecay,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub decay: f64,
    pub l2_factor: f64,
    pub decay_mode: DecayMode,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            lr0: 0.001,
            momentum: 0.9,
            decay: 1e-4,
            l2_factor: 1e-4,
            decay_mode: DecayMode::LrDecay,
        }
    }
}

impl SgdConfig {
    /// A zero `lr0` is accepted so that training can be run as a no-op.
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return Err(Error::config(format!("learning rate must be >= 0, got {}", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(Error::config(format!("decay must be >= 0, got {}", self.decay)));
        }
        if !(self.l2_factor >= 0.0 && self.l2_factor.is_finite()) {
            return Err(Error::config(format!("L2 factor must be >= 0, got {}", self.l2_factor)));
        }
        Ok(())
    }
}

pub fn effective_lr(config: &SgdConfig, iteration: u64) -> f64 {
    match config.decay_mode {
        DecayMode::LrDecay => config.lr0 / (1.0 + config.decay * iteration as f64),
        DecayMode::WeightDecay => config.lr0,
    }
}

/// Velocities (one per parameter tensor) and the batch counter.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptState {
    pub velocities: Vec<Tensor>,
    pub iteration: u64,
}

/// One update: `v <- momentum v - lr_t g; w <- w + v`. Gradients must already
/// contain the L2 term. Velocities are created as zeros on first use.
pub fn sgd_step(params: &mut [&mut Param], state: &mut OptState, config: &SgdConfig) -> Result<()> {
    if state.velocities.is_empty() {
        state.velocities = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
    }
    if state.velocities.len() != params.len() {
        return Err(Error::shape(format!(
            "optimizer holds {} velocities for {} parameters",
            state.velocities.len(),
            params.len()
        )));
    }
    for (p, v) in params.iter().zip(&state.velocities) {
        if p.value.shape() != v.shape() || p.grad.shape() != v.shape() {
            return Err(Error::shape(format!(
                "parameter {:?} / gradient {:?} / velocity {:?} disagree",
                p.value.shape(),
                p.grad.shape(),
                v.shape()
            )));
        }
    }

    let lr = effective_lr(config, state.iteration);
    let wd = match config.decay_mode {
        DecayMode::WeightDecay => config.decay,
        DecayMode::LrDecay => 0.0,
    };
    for (p, v) in params.iter_mut().zip(&mut state.velocities) {
        let wd = if p.decays() { wd } else { 0.0 };
        let Param { value, grad, .. } = &mut **p;
        for ((w, g), vel) in value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(v.data_mut())
        {
            let g = g + wd * *w;
            *vel = config.momentum * *vel - lr * g;
            *w += *vel;
        }
    }
    state.iteration += 1;
    Ok(())
}
