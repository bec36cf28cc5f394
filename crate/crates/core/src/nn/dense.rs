use serde::{Deserialize, Serialize};

use super::linalg::gemm;
use super::param::{Param, ParamRole};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// `out = x W^T + b` on (N, in) inputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// (out, in)
    pub weight: Param,
    pub bias: Param,
    #[serde(skip)]
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        let w = (0..inputs * outputs)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        Self::from_parts(
            Tensor::new(vec![outputs, inputs], w).unwrap(),
            Tensor::zeros(&[outputs]),
        )
        .unwrap()
    }

    pub fn from_parts(weight: Tensor, bias: Tensor) -> Result<Self> {
        let (outputs, inputs) = weight.dims2()?;
        if bias.shape() != [outputs] {
            return Err(Error::shape(format!(
                "bias shape {:?} does not match {outputs} outputs",
                bias.shape()
            )));
        }
        Ok(Dense {
            inputs,
            outputs,
            weight: Param::new(weight, ParamRole::Weight),
            bias: Param::new(bias, ParamRole::Bias),
            cache: None,
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [n, k] if k == self.inputs => Ok(vec![n, self.outputs]),
            _ => Err(Error::shape(format!(
                "dense expects (N, {}), got {input:?}",
                self.inputs
            ))),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        self.output_shape(x.shape())?;
        let n = x.batch();
        let mut out = Vec::with_capacity(n * self.outputs);
        for _ in 0..n {
            out.extend_from_slice(self.bias.value.data());
        }
        gemm(
            n,
            self.inputs,
            self.outputs,
            x.data(),
            false,
            self.weight.value.data(),
            true,
            1.0,
            &mut out,
        );
        self.cache = Some(x.clone());
        Tensor::new(vec![n, self.outputs], out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("dense backward without forward".into()))?;
        let n = x.batch();
        if grad.shape() != [n, self.outputs] {
            return Err(Error::shape(format!(
                "dense grad shape {:?} does not match output",
                grad.shape()
            )));
        }
        gemm(
            self.outputs,
            n,
            self.inputs,
            grad.data(),
            true,
            x.data(),
            false,
            1.0,
            self.weight.grad.data_mut(),
        );
        let db = self.bias.grad.data_mut();
        for row in grad.data().chunks_exact(self.outputs) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let mut dx = vec![0.0; n * self.inputs];
        gemm(
            n,
            self.outputs,
            self.inputs,
            grad.data(),
            false,
            self.weight.value.data(),
            false,
            0.0,
            &mut dx,
        );
        Tensor::new(vec![n, self.inputs], dx)
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub(crate) fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }
}
