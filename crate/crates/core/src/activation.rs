//! CoLU and the comparison activations, with analytic derivatives.
//!
//! Every function here is total over the finite `f64` range: the result is
//! finite and never NaN for any finite input. Non-finite inputs are rejected
//! with [`Error::Domain`].
//!
//! CoLU is `f(x) = x / (1 - x e^{-(x + e^x)})`. It is evaluated piecewise:
//!
//! * `x >= 10`: the correction term underflows, `f(x) = x` exactly and `f'(x) = 1`.
//! * `x <= -30`: `f(x) = -e^x` and `f'(x) = -e^x` (relative error below 1e-13).
//! * otherwise the direct form, and for the derivative the rearrangement
//!   `(1 - x^2 (e^{-e^x} + e^{-(x+e^x)})) / (1 - x e^{-(x+e^x)})^2`, which
//!   never forms `lambda = e^{x+e^x}` (that overflows near x = 6.57).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// SELU negative-side scale.
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
/// SELU output scale.
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;

const COLU_LINEAR_FROM: f64 = 10.0;
const COLU_EXP_BELOW: f64 = -30.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActivationKind {
    Colu,
    Relu,
    Swish,
    Sigmoid,
    Mish,
    Elu { alpha: f64 },
    Selu,
    Tanh,
    Softplus,
}

impl ActivationKind {
    /// The nine kinds, ELU with alpha = 1.
    pub const ALL: [ActivationKind; 9] = [
        ActivationKind::Colu,
        ActivationKind::Relu,
        ActivationKind::Swish,
        ActivationKind::Sigmoid,
        ActivationKind::Mish,
        ActivationKind::Elu { alpha: 1.0 },
        ActivationKind::Selu,
        ActivationKind::Tanh,
        ActivationKind::Softplus,
    ];

    pub fn elu(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::argument(format!("ELU alpha must be > 0, got {alpha}")));
        }
        Ok(ActivationKind::Elu { alpha })
    }

    /// Short lower-case identifier, also accepted by [`FromStr`].
    /// Name accepted back by `FromStr`: the id, with `:alpha` for a
    /// non-default ELU.
    pub fn cli_name(&self) -> String {
        match self {
            ActivationKind::Elu { alpha } if *alpha != 1.0 => format!("elu:{alpha}"),
            k => k.id().to_string(),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ActivationKind::Colu => "colu",
            ActivationKind::Relu => "relu",
            ActivationKind::Swish => "swish",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Mish => "mish",
            ActivationKind::Elu { .. } => "elu",
            ActivationKind::Selu => "selu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Softplus => "softplus",
        }
    }

    /// f(x) without the finiteness check.
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            ActivationKind::Colu => colu_value(x),
            ActivationKind::Relu => {
                if x >= 0.0 {
                    x
                } else {
                    0.0
                }
            }
            // e^{-x} overflowing to inf gives x/inf = -0, still finite
            ActivationKind::Swish => x / (1.0 + (-x).exp()),
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Mish => x * softplus(x).tanh(),
            ActivationKind::Elu { alpha } => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * x.exp_m1()
                }
            }
            ActivationKind::Selu => {
                if x >= 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
                }
            }
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Softplus => softplus(x),
        }
    }

    /// `(value(x), slope(x))` sharing the exponentials where the formulas
    /// allow it. Agrees with the separate calls to a few ulp.
    pub fn value_and_slope(self, x: f64) -> (f64, f64) {
        match self {
            ActivationKind::Colu if x > COLU_EXP_BELOW && x < COLU_LINEAR_FROM => {
                let ex = x.exp();
                let inner = (-(x + ex)).exp();
                let den = 1.0 - x * inner;
                let slope = (1.0 - x * x * (inner * ex + inner)) / (den * den);
                (x / den, slope)
            }
            ActivationKind::Swish => {
                let s = sigmoid(x);
                (x * s, s + x * s * (1.0 - s))
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                (s, s * (1.0 - s))
            }
            ActivationKind::Mish => {
                let t = softplus(x).tanh();
                (x * t, t + x * sigmoid(x) * (1.0 - t * t))
            }
            k => (k.value(x), k.slope(x)),
        }
    }

    /// f'(x) without the finiteness check. At the ReLU/ELU/SELU kink the
    /// right-hand derivative is returned.
    #[inline]
    pub fn slope(self, x: f64) -> f64 {
        match self {
            ActivationKind::Colu => colu_slope(x),
            ActivationKind::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Swish => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::Mish => {
                let t = softplus(x).tanh();
                t + x * sigmoid(x) * (1.0 - t * t)
            }
            ActivationKind::Elu { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    alpha * x.exp()
                }
            }
            ActivationKind::Selu => {
                if x >= 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp()
                }
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Softplus => sigmoid(x),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationKind::Colu => f.write_str("CoLU"),
            ActivationKind::Relu => f.write_str("ReLU"),
            ActivationKind::Swish => f.write_str("Swish"),
            ActivationKind::Sigmoid => f.write_str("Sigmoid"),
            ActivationKind::Mish => f.write_str("Mish"),
            ActivationKind::Elu { alpha } if *alpha == 1.0 => f.write_str("ELU"),
            ActivationKind::Elu { alpha } => write!(f, "ELU(alpha={alpha})"),
            ActivationKind::Selu => f.write_str("SELU"),
            ActivationKind::Tanh => f.write_str("TanH"),
            ActivationKind::Softplus => f.write_str("Softplus"),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    /// Accepts the lower-case ids, case-insensitively; ELU takes an optional
    /// `:alpha` suffix (`elu:0.5`).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, param) = match lower.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (lower.as_str(), None),
        };
        let kind = match name {
            "colu" => ActivationKind::Colu,
            "relu" => ActivationKind::Relu,
            "swish" => ActivationKind::Swish,
            "sigmoid" => ActivationKind::Sigmoid,
            "mish" => ActivationKind::Mish,
            "elu" => {
                let alpha = match param {
                    Some(p) => p
                        .parse::<f64>()
                        .map_err(|_| Error::argument(format!("bad ELU alpha '{p}'")))?,
                    None => 1.0,
                };
                return ActivationKind::elu(alpha);
            }
            "selu" => ActivationKind::Selu,
            "tanh" => ActivationKind::Tanh,
            "softplus" => ActivationKind::Softplus,
            _ => return Err(Error::argument(format!("unknown activation '{s}'"))),
        };
        if param.is_some() {
            return Err(Error::argument(format!("activation '{name}' takes no parameter")));
        }
        Ok(kind)
    }
}

fn check(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain {
            value: x,
            index: None,
        })
    }
}

#[inline]
fn colu_value(x: f64) -> f64 {
    if x >= COLU_LINEAR_FROM {
        x
    } else if x <= COLU_EXP_BELOW {
        -x.exp()
    } else {
        x / (1.0 - x * (-(x + x.exp())).exp())
    }
}

#[inline]
fn colu_slope(x: f64) -> f64 {
    if x >= COLU_LINEAR_FROM {
        1.0
    } else if x <= COLU_EXP_BELOW {
        -x.exp()
    } else {
        let ex = x.exp();
        let inner = (-(x + ex)).exp();
        let den = 1.0 - x * inner;
        (1.0 - x * x * ((-ex).exp() + inner)) / (den * den)
    }
}

/// Logistic sigmoid, branch-wise on the sign of x so e^x never overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) as max(x, 0) + ln(1 + e^{-|x|}).
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// CoLU value.
pub fn colu(x: f64) -> Result<f64> {
    Ok(colu_value(check(x)?))
}

/// CoLU derivative.
pub fn colu_prime(x: f64) -> Result<f64> {
    Ok(colu_slope(check(x)?))
}

pub fn eval(kind: ActivationKind, x: f64) -> Result<f64> {
    Ok(kind.value(check(x)?))
}

pub fn derivative(kind: ActivationKind, x: f64) -> Result<f64> {
    Ok(kind.slope(check(x)?))
}

fn check_all(xs: &Tensor) -> Result<()> {
    match xs.data().iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Domain {
            value: xs.data()[i],
            index: Some(i),
        }),
        None => Ok(()),
    }
}

/// Elementwise [`eval`]; the error names the first non-finite element.
pub fn eval_batch(kind: ActivationKind, xs: &Tensor) -> Result<Tensor> {
    check_all(xs)?;
    Ok(xs.map(|x| kind.value(x)))
}

/// Elementwise [`derivative`].
pub fn derivative_batch(kind: ActivationKind, xs: &Tensor) -> Result<Tensor> {
    check_all(xs)?;
    Ok(xs.map(|x| kind.slope(x)))
}
