use serde::{Deserialize, Serialize};

use super::batchnorm::BatchNorm2d;
use super::conv::Conv2d;
use super::dense::Dense;
use super::dropout::Dropout;
use super::param::Param;
use super::pool::MaxPool2d;
use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Elementwise activation layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    /// f'(x) from the last forward pass.
    #[serde(skip)]
    cache: Option<Tensor>,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Self {
        Activation { kind, cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let kind = self.kind;
        let mut y = Vec::with_capacity(x.len());
        let mut slope = Vec::with_capacity(x.len());
        for &v in x.data() {
            let (f, d) = kind.value_and_slope(v);
            y.push(f);
            slope.push(d);
        }
        self.cache = Some(Tensor::new(x.shape().to_vec(), slope)?);
        Tensor::new(x.shape().to_vec(), y)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let slope = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("activation backward without forward".into()))?;
        if slope.shape() != grad.shape() {
            return Err(Error::shape("activation grad does not match input".to_string()));
        }
        let data = slope.data().iter().zip(grad.data()).map(|(d, g)| d * g).collect();
        Tensor::new(grad.shape().to_vec(), data)
    }
}

/// (N, ...) -> (N, prod(...)).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Flatten {
    #[serde(skip)]
    cache: Option<Vec<usize>>,
}

impl Flatten {
    pub fn output_shape(input: &[usize]) -> Result<Vec<usize>> {
        match input.split_first() {
            Some((&n, rest)) => Ok(vec![n, rest.iter().product()]),
            None => Err(Error::shape("cannot flatten a scalar".to_string())),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let shape = Self::output_shape(x.shape())?;
        self.cache = Some(x.shape().to_vec());
        x.clone().reshape(&shape)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("flatten backward without forward".into()))?;
        grad.clone().reshape(&shape)
    }
}

/// Identity skip around an inner stack: `y = inner(x) + x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualGroup {
    pub layers: Vec<Layer>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Layer {
    Conv2d(Conv2d),
    Dense(Dense),
    BatchNorm2d(BatchNorm2d),
    MaxPool2d(MaxPool2d),
    Dropout(Dropout),
    Activation(Activation),
    Flatten(Flatten),
    ResidualGroup(ResidualGroup),
}

impl Layer {
    pub fn tag(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv",
            Layer::Dense(_) => "dense",
            Layer::BatchNorm2d(_) => "batchnorm",
            Layer::MaxPool2d(_) => "pool",
            Layer::Dropout(_) => "dropout",
            Layer::Activation(_) => "act",
            Layer::Flatten(_) => "flatten",
            Layer::ResidualGroup(_) => "residual",
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv2d(l) => l.output_shape(input),
            Layer::Dense(l) => l.output_shape(input),
            Layer::BatchNorm2d(l) => l.output_shape(input),
            Layer::MaxPool2d(l) => l.output_shape(input),
            Layer::Dropout(_) | Layer::Activation(_) => Ok(input.to_vec()),
            Layer::Flatten(_) => Flatten::output_shape(input),
            Layer::ResidualGroup(g) => {
                let out = g
                    .layers
                    .iter()
                    .try_fold(input.to_vec(), |s, l| l.output_shape(&s))?;
                if out != input {
                    return Err(Error::shape(format!(
                        "residual group maps {input:?} to {out:?}; shapes must match"
                    )));
                }
                Ok(out)
            }
        }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let train = mode == Mode::Train;
        let y = match self {
            Layer::Conv2d(l) => l.forward(x)?,
            Layer::Dense(l) => l.forward(x)?,
            Layer::BatchNorm2d(l) => l.forward(x, train)?,
            Layer::MaxPool2d(l) => l.forward(x)?,
            Layer::Dropout(l) => l.forward(x, train, rng)?,
            Layer::Activation(l) => l.forward(x)?,
            Layer::Flatten(l) => l.forward(x)?,
            Layer::ResidualGroup(g) => {
                let mut h = x.clone();
                for l in &mut g.layers {
                    h = l.forward(&h, mode, rng)?;
                }
                if h.shape() != x.shape() {
                    return Err(Error::shape(format!(
                        "residual group maps {:?} to {:?}",
                        x.shape(),
                        h.shape()
                    )));
                }
                h.add_assign(x);
                h
            }
        };
        debug_assert!(y.all_finite(), "{} produced a non-finite value", self.tag());
        Ok(y)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let dx = match self {
            Layer::Conv2d(l) => l.backward(grad)?,
            Layer::Dense(l) => l.backward(grad)?,
            Layer::BatchNorm2d(l) => l.backward(grad)?,
            Layer::MaxPool2d(l) => l.backward(grad)?,
            Layer::Dropout(l) => l.backward(grad)?,
            Layer::Activation(l) => l.backward(grad)?,
            Layer::Flatten(l) => l.backward(grad)?,
            Layer::ResidualGroup(g) => {
                let mut h = grad.clone();
                for l in g.layers.iter_mut().rev() {
                    h = l.backward(&h)?;
                }
                h.add_assign(grad);
                h
            }
        };
        debug_assert!(dx.all_finite(), "{} backward produced a non-finite value", self.tag());
        Ok(dx)
    }

    pub(crate) fn visit_params<'a>(&'a self, out: &mut Vec<&'a Param>) {
        match self {
            Layer::Conv2d(l) => out.extend(l.params()),
            Layer::Dense(l) => out.extend(l.params()),
            Layer::BatchNorm2d(l) => out.extend(l.params()),
            Layer::ResidualGroup(g) => g.layers.iter().for_each(|l| l.visit_params(out)),
            _ => {}
        }
    }

    pub(crate) fn visit_params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Param>) {
        match self {
            Layer::Conv2d(l) => out.extend(l.params_mut()),
            Layer::Dense(l) => out.extend(l.params_mut()),
            Layer::BatchNorm2d(l) => out.extend(l.params_mut()),
            Layer::ResidualGroup(g) => g.layers.iter_mut().for_each(|l| l.visit_params_mut(out)),
            _ => {}
        }
    }

    /// Depth-first walk over this layer and any nested layers.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Layer)) {
        f(self);
        if let Layer::ResidualGroup(g) = self {
            g.layers.iter().for_each(|l| l.walk(f));
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Layer)) {
        f(self);
        if let Layer::ResidualGroup(g) = self {
            g.layers.iter_mut().for_each(|l| l.walk_mut(f));
        }
    }
}
