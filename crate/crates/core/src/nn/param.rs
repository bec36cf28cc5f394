use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamRole {
    /// Convolution kernel or dense weight matrix; the only role L2 touches.
    Weight,
    Bias,
    /// Batchnorm gamma.
    Scale,
    /// Batchnorm beta.
    Shift,
}

/// Trainable tensor with its accumulated gradient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
    pub role: ParamRole,
}

impl Param {
    pub fn new(value: Tensor, role: ParamRole) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param { value, grad, role }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn decays(&self) -> bool {
        self.role == ParamRole::Weight
    }
}
