use serde::{Deserialize, Serialize};

use super::param::{Param, ParamRole};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization over (N, H, W).
///
/// Train mode normalizes with the biased batch variance and folds the
/// unbiased variance into the running estimate; eval mode uses the running
/// estimates only.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchNorm2d {
    pub channels: usize,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
    #[serde(skip)]
    cache: Option<BnCache>,
}

#[derive(Clone, Debug)]
struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    dims: (usize, usize, usize, usize),
    batch_stats: bool,
}

impl BatchNorm2d {
    pub fn new(channels: usize) -> Self {
        BatchNorm2d {
            channels,
            gamma: Param::new(Tensor::full(&[channels], 1.0), ParamRole::Scale),
            beta: Param::new(Tensor::zeros(&[channels]), ParamRole::Shift),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
            cache: None,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [_, c, _, _] if c == self.channels => Ok(input.to_vec()),
            _ => Err(Error::shape(format!(
                "batchnorm expects (N, {}, H, W), got {input:?}",
                self.channels
            ))),
        }
    }

    pub fn forward(&mut self, x: &Tensor, train: bool) -> Result<Tensor> {
        self.output_shape(x.shape())?;
        let dims = x.dims4()?;
        let (n, c, h, w) = dims;
        if train && n < 2 {
            return Err(Error::Usage(format!(
                "batchnorm in train mode needs a batch of at least 2, got {n}"
            )));
        }
        let hw = h * w;
        let m = (n * hw) as f64;
        let data = x.data();
        let mut xhat = vec![0.0; data.len()];
        let mut out = vec![0.0; data.len()];
        let mut inv_stds = vec![0.0; c];

        for ch in 0..c {
            let planes = (0..n).map(|s| &data[(s * c + ch) * hw..][..hw]);
            let (mean, var) = if train {
                let mean = planes.clone().flatten().sum::<f64>() / m;
                let var = planes.flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
                let unbiased = var * m / (m - 1.0);
                self.running_mean[ch] =
                    (1.0 - self.momentum) * self.running_mean[ch] + self.momentum * mean;
                self.running_var[ch] =
                    (1.0 - self.momentum) * self.running_var[ch] + self.momentum * unbiased;
                (mean, var)
            } else {
                (self.running_mean[ch], self.running_var[ch])
            };
            let inv_std = 1.0 / (var + self.eps).sqrt();
            inv_stds[ch] = inv_std;
            let g = self.gamma.value.data()[ch];
            let b = self.beta.value.data()[ch];
            for s in 0..n {
                let off = (s * c + ch) * hw;
                for i in off..off + hw {
                    let xh = (data[i] - mean) * inv_std;
                    xhat[i] = xh;
                    out[i] = g * xh + b;
                }
            }
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std: inv_stds,
            dims,
            batch_stats: train,
        });
        Tensor::new(x.shape().to_vec(), out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("batchnorm backward without forward".into()))?;
        let (n, c, h, w) = cache.dims;
        if grad.shape() != [n, c, h, w] {
            return Err(Error::shape(format!(
                "batchnorm grad shape {:?} does not match output",
                grad.shape()
            )));
        }
        let hw = h * w;
        let m = (n * hw) as f64;
        let g = grad.data();
        let mut dx = vec![0.0; g.len()];
        for ch in 0..c {
            let gamma = self.gamma.value.data()[ch];
            let inv_std = cache.inv_std[ch];
            let mut sum_g = 0.0;
            let mut sum_gx = 0.0;
            for s in 0..n {
                let off = (s * c + ch) * hw;
                for i in off..off + hw {
                    sum_g += g[i];
                    sum_gx += g[i] * cache.xhat[i];
                }
            }
            self.gamma.grad.data_mut()[ch] += sum_gx;
            self.beta.grad.data_mut()[ch] += sum_g;
            for s in 0..n {
                let off = (s * c + ch) * hw;
                for i in off..off + hw {
                    dx[i] = if cache.batch_stats {
                        gamma * inv_std / m * (m * g[i] - sum_g - cache.xhat[i] * sum_gx)
                    } else {
                        gamma * inv_std * g[i]
                    };
                }
            }
        }
        Tensor::new(vec![n, c, h, w], dx)
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.gamma, &mut self.beta]
    }

    pub(crate) fn params(&self) -> [&Param; 2] {
        [&self.gamma, &self.beta]
    }
}
