use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Inverted dropout: in train mode each element is kept with probability
/// `1 - rate` and scaled by `1 / (1 - rate)`. Eval mode is the identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dropout {
    pub rate: f64,
    /// Reuse the previous mask instead of drawing a new one (gradient checks).
    #[serde(skip)]
    pub frozen: bool,
    #[serde(skip)]
    mask: Option<Vec<f64>>,
    #[serde(skip)]
    last_was_train: bool,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::argument(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        Ok(Dropout {
            rate,
            frozen: false,
            mask: None,
            last_was_train: false,
        })
    }

    pub fn mask(&self) -> Option<&[f64]> {
        self.mask.as_deref()
    }

    pub fn forward(&mut self, x: &Tensor, train: bool, rng: &mut Rng) -> Result<Tensor> {
        self.last_was_train = train;
        if !train || self.rate == 0.0 {
            self.mask = None;
            return Ok(x.clone());
        }
        let reuse = self.frozen && self.mask.as_ref().is_some_and(|m| m.len() == x.len());
        if !reuse {
            let scale = 1.0 / (1.0 - self.rate);
            let mask = (0..x.len())
                .map(|_| if rng.uniform() >= self.rate { scale } else { 0.0 })
                .collect();
            self.mask = Some(mask);
        }
        let mask = self.mask.as_ref().unwrap();
        let data = x.data().iter().zip(mask).map(|(v, m)| v * m).collect();
        Tensor::new(x.shape().to_vec(), data)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        match (&self.mask, self.last_was_train) {
            (Some(mask), true) => {
                if mask.len() != grad.len() {
                    return Err(Error::shape("dropout grad does not match mask".to_string()));
                }
                let data = grad.data().iter().zip(mask).map(|(g, m)| g * m).collect();
                Tensor::new(grad.shape().to_vec(), data)
            }
            _ => Ok(grad.clone()),
        }
    }
}
