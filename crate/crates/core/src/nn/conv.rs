use serde::{Deserialize, Serialize};

use super::linalg::gemm;
use super::param::{Param, ParamRole};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Stride-1 convolution with zero "same" padding (odd kernels only).
///
/// Forward lowers the whole batch to one column matrix of shape
/// (C_in k k) x (N H W) and runs a single GEMM against the kernel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// (C_out, C_in, k, k)
    pub weight: Param,
    /// (C_out)
    pub bias: Param,
    #[serde(skip)]
    cache: Option<ConvCache>,
}

#[derive(Clone, Debug)]
struct ConvCache {
    cols: Vec<f64>,
    dims: (usize, usize, usize, usize),
}

impl Conv2d {
    /// He-uniform kernel, zero bias.
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut Rng) -> Self {
        assert!(kernel % 2 == 1, "same padding needs an odd kernel");
        let fan_in = in_channels * kernel * kernel;
        let bound = (6.0 / fan_in as f64).sqrt();
        let n = out_channels * fan_in;
        let w: Vec<f64> = (0..n).map(|_| rng.uniform_range(-bound, bound)).collect();
        Self::from_parts(
            Tensor::new(vec![out_channels, in_channels, kernel, kernel], w).unwrap(),
            Tensor::zeros(&[out_channels]),
        )
        .unwrap()
    }

    pub fn from_parts(weight: Tensor, bias: Tensor) -> Result<Self> {
        let (out_channels, in_channels, kh, kw) = weight.dims4()?;
        if kh != kw || kh % 2 == 0 {
            return Err(Error::shape(format!(
                "kernel must be square and odd, got {kh}x{kw}"
            )));
        }
        if bias.shape() != [out_channels] {
            return Err(Error::shape(format!(
                "bias shape {:?} does not match {out_channels} output channels",
                bias.shape()
            )));
        }
        Ok(Conv2d {
            in_channels,
            out_channels,
            kernel: kh,
            weight: Param::new(weight, ParamRole::Weight),
            bias: Param::new(bias, ParamRole::Bias),
            cache: None,
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [n, c, h, w] if c == self.in_channels => Ok(vec![n, self.out_channels, h, w]),
            _ => Err(Error::shape(format!(
                "conv expects (N, {}, H, W), got {input:?}",
                self.in_channels
            ))),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        self.output_shape(x.shape())?;
        let dims = x.dims4()?;
        let (n, _, h, w) = dims;
        let cols = im2col(x.data(), dims, self.kernel);
        let nhw = n * h * w;
        let ck = self.in_channels * self.kernel * self.kernel;
        let mut prod = vec![0.0; self.out_channels * nhw];
        gemm(
            self.out_channels,
            ck,
            nhw,
            self.weight.value.data(),
            false,
            &cols,
            false,
            0.0,
            &mut prod,
        );
        let hw = h * w;
        let bias = self.bias.value.data();
        let mut out = vec![0.0; prod.len()];
        for s in 0..n {
            for o in 0..self.out_channels {
                let src = &prod[o * nhw + s * hw..o * nhw + (s + 1) * hw];
                let dst = &mut out[(s * self.out_channels + o) * hw..][..hw];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d = v + bias[o];
                }
            }
        }
        self.cache = Some(ConvCache { cols, dims });
        Tensor::new(vec![n, self.out_channels, h, w], out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("conv backward without forward".into()))?;
        let (n, c, h, w) = cache.dims;
        if grad.shape() != [n, self.out_channels, h, w] {
            return Err(Error::shape(format!(
                "conv grad shape {:?} does not match output",
                grad.shape()
            )));
        }
        let hw = h * w;
        let nhw = n * hw;
        let ck = c * self.kernel * self.kernel;

        let mut gmat = vec![0.0; self.out_channels * nhw];
        let g = grad.data();
        let db = self.bias.grad.data_mut();
        for s in 0..n {
            for o in 0..self.out_channels {
                let src = &g[(s * self.out_channels + o) * hw..][..hw];
                gmat[o * nhw + s * hw..o * nhw + (s + 1) * hw].copy_from_slice(src);
                db[o] += src.iter().sum::<f64>();
            }
        }
        gemm(
            self.out_channels,
            nhw,
            ck,
            &gmat,
            false,
            &cache.cols,
            true,
            1.0,
            self.weight.grad.data_mut(),
        );
        let mut dcols = cache.cols;
        gemm(
            ck,
            self.out_channels,
            nhw,
            self.weight.value.data(),
            true,
            &gmat,
            false,
            0.0,
            &mut dcols,
        );
        let dx = col2im(&dcols, cache.dims, self.kernel);
        Tensor::new(vec![n, c, h, w], dx)
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub(crate) fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }
}

fn im2col(x: &[f64], (n, c, h, w): (usize, usize, usize, usize), k: usize) -> Vec<f64> {
    let pad = k / 2;
    let hw = h * w;
    let nhw = n * hw;
    let mut cols = vec![0.0; c * k * k * nhw];
    for ch in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                for s in 0..n {
                    let plane = &x[(s * c + ch) * hw..][..hw];
                    let dst = &mut cols[row * nhw + s * hw..][..hw];
                    for y in 0..h {
                        let iy = y + ky;
                        if iy < pad || iy - pad >= h {
                            continue;
                        }
                        let src_row = &plane[(iy - pad) * w..][..w];
                        let dst_row = &mut dst[y * w..][..w];
                        for (xo, d) in dst_row.iter_mut().enumerate() {
                            let ix = xo + kx;
                            if ix >= pad && ix - pad < w {
                                *d = src_row[ix - pad];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], (n, c, h, w): (usize, usize, usize, usize), k: usize) -> Vec<f64> {
    let pad = k / 2;
    let hw = h * w;
    let nhw = n * hw;
    let mut x = vec![0.0; n * c * hw];
    for ch in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                for s in 0..n {
                    let src = &cols[row * nhw + s * hw..][..hw];
                    let plane = &mut x[(s * c + ch) * hw..][..hw];
                    for y in 0..h {
                        let iy = y + ky;
                        if iy < pad || iy - pad >= h {
                            continue;
                        }
                        let src_row = &src[y * w..][..w];
                        let dst_row = &mut plane[(iy - pad) * w..][..w];
                        for (xo, v) in src_row.iter().enumerate() {
                            let ix = xo + kx;
                            if ix >= pad && ix - pad < w {
                                dst_row[ix - pad] += v;
                            }
                        }
                    }
                }
            }
        }
    }
    x
}
