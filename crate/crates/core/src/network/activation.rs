use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::config::Activation;
use crate::scalar::Scalar;

/// `x·Φ(x)` with the exact normal CDF.
#[inline]
pub fn gelu<S: Scalar>(x: S) -> S {
    let half = S::lit(0.5);
    x * half * (S::one() + (x * S::lit(FRAC_1_SQRT_2)).erf())
}

/// `Φ(x) + x·φ(x)`.
#[inline]
pub fn gelu_derivative<S: Scalar>(x: S) -> S {
    let cdf = S::lit(0.5) * (S::one() + (x * S::lit(FRAC_1_SQRT_2)).erf());
    let pdf = (-(x * x) * S::lit(0.5)).exp() * S::lit(1.0 / (2.0 * PI).sqrt());
    cdf + x * pdf
}

impl Activation {
    #[inline]
    pub(crate) fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Gelu => gelu(x),
            Activation::Relu => x.max(S::zero()),
        }
    }

    /// `(apply(x), derivative(x))` sharing the CDF evaluation.
    #[inline]
    pub(crate) fn apply_with_derivative<S: Scalar>(self, x: S) -> (S, S) {
        match self {
            Activation::Gelu => {
                let cdf = S::lit(0.5) * (S::one() + (x * S::lit(FRAC_1_SQRT_2)).erf());
                let pdf = (-(x * x) * S::lit(0.5)).exp() * S::lit(1.0 / (2.0 * PI).sqrt());
                (x * cdf, cdf + x * pdf)
            }
            Activation::Relu => (self.apply(x), self.derivative(x)),
        }
    }

    #[inline]
    pub(crate) fn derivative<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Gelu => gelu_derivative(x),
            Activation::Relu => {
                if x > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
        }
    }
}
