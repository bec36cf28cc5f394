use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Square max-pooling with stride equal to the window. Ragged right/bottom
/// edges are pooled over the part of the window that exists, which matches
/// padding with -inf. Ties go to the first element in row-major order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxPool2d {
    pub size: usize,
    #[serde(skip)]
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1);
        MaxPool2d { size, cache: None }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [n, c, h, w] => Ok(vec![n, c, h.div_ceil(self.size), w.div_ceil(self.size)]),
            _ => Err(Error::shape(format!("maxpool expects (N, C, H, W), got {input:?}"))),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let out_shape = self.output_shape(x.shape())?;
        let (n, c, h, w) = x.dims4()?;
        let (oh, ow) = (out_shape[2], out_shape[3]);
        let k = self.size;
        let data = x.data();
        let mut out = Vec::with_capacity(n * c * oh * ow);
        let mut argmax = Vec::with_capacity(out.capacity());
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = usize::MAX;
                    let mut best_v = f64::NEG_INFINITY;
                    for y in oy * k..((oy + 1) * k).min(h) {
                        for xx in ox * k..((ox + 1) * k).min(w) {
                            let i = base + y * w + xx;
                            if best == usize::MAX || data[i] > best_v {
                                best = i;
                                best_v = data[i];
                            }
                        }
                    }
                    out.push(best_v);
                    argmax.push(best);
                }
            }
        }
        self.cache = Some((argmax, x.shape().to_vec()));
        Tensor::new(out_shape, out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (argmax, in_shape) = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("maxpool backward without forward".into()))?;
        if grad.len() != argmax.len() {
            return Err(Error::shape(format!(
                "maxpool grad has {} elements, expected {}",
                grad.len(),
                argmax.len()
            )));
        }
        let mut dx = Tensor::zeros(&in_shape);
        let d = dx.data_mut();
        for (&i, &g) in argmax.iter().zip(grad.data()) {
            d[i] += g;
        }
        Ok(dx)
    }
}
