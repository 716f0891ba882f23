use serde::{Deserialize, Serialize};

/// Scalar activation `φ` with the derivatives the identification needs.
pub trait ScalarActivation {
    fn value(&self, t: f64) -> f64;
    fn d1(&self, t: f64) -> f64;
    fn d2(&self, t: f64) -> f64;
    /// Whether `φ(-t) = -φ(t)`.
    fn is_odd(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `1/(1+e^{-t}) - 1/2`
    ShiftedSigmoid,
    Tanh,
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl ScalarActivation for Activation {
    #[inline]
    fn value(&self, t: f64) -> f64 {
        match self {
            Activation::ShiftedSigmoid => logistic(t) - 0.5,
            Activation::Tanh => t.tanh(),
        }
    }

    #[inline]
    fn d1(&self, t: f64) -> f64 {
        match self {
            Activation::ShiftedSigmoid => {
                let s = logistic(t);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let th = t.tanh();
                1.0 - th * th
            }
        }
    }

    #[inline]
    fn d2(&self, t: f64) -> f64 {
        match self {
            Activation::ShiftedSigmoid => {
                let s = logistic(t);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            Activation::Tanh => {
                let th = t.tanh();
                -2.0 * th * (1.0 - th * th)
            }
        }
    }

    fn is_odd(&self) -> bool {
        true
    }
}

impl Activation {
    /// Gradient-descent step size used for the refit with this activation.
    pub fn default_refit_lr(self) -> f64 {
        match self {
            Activation::ShiftedSigmoid => 0.5,
            Activation::Tanh => 0.025,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigmoid" | "shifted_sigmoid" | "sig" => Ok(Activation::ShiftedSigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(format!("unknown activation `{other}` (expected sigmoid or tanh)")),
        }
    }
}
