//! Floating-point abstraction used by the network and optimizer.
//!
//! Training runs in `f32`; gradient oracles run the same code in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use half::f16;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Short tag used in diagnostics ("f32", "f64").
    const NAME: &'static str;

    fn erf(self) -> Self;

    /// Round-to-nearest-even conversion to half precision.
    fn to_f16(self) -> f16;

    fn from_f16(h: f16) -> Self;

    #[inline(always)]
    fn lit(x: f64) -> Self {
        // f32 and f64 both accept every finite f64 (with rounding)
        Self::from_f64(x).unwrap()
    }

    #[inline(always)]
    fn widen(self) -> f64 {
        self.to_f64().unwrap()
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    #[inline(always)]
    fn erf(self) -> Self {
        erf_f32(self)
    }

    #[inline(always)]
    fn to_f16(self) -> f16 {
        f16::from_f32(self)
    }

    #[inline(always)]
    fn from_f16(h: f16) -> Self {
        h.to_f32()
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    #[inline(always)]
    fn erf(self) -> Self {
        libm::erf(self)
    }

    #[inline(always)]
    fn to_f16(self) -> f16 {
        f16::from_f64(self)
    }

    #[inline(always)]
    fn from_f16(h: f16) -> Self {
        h.to_f64()
    }
}

/// Branch-free rational approximation of erf in single precision, within
/// 5e-7 of the exact value. Arguments are clamped to [-4, 4].
#[inline(always)]
fn erf_f32(x: f32) -> f32 {
    const A: [f32; 7] = [
        -2.726_142_3e-10,
        2.770_681_4e-8,
        -2.101_024e-6,
        -5.692_506_4e-5,
        -7.349_906_3e-4,
        -2.954_6e-3,
        -1.609_603_3e-2,
    ];
    const B: [f32; 5] = [-1.456_607_2e-5, -2.133_740_6e-4, -1.682_827e-3, -7.373_329_2e-3, -1.426_473_9e-2];
    let x = x.clamp(-4.0, 4.0);
    let x2 = x * x;
    let mut p = A[0];
    for &a in &A[1..] {
        p = p * x2 + a;
    }
    let mut q = B[0];
    for &b in &B[1..] {
        q = q * x2 + b;
    }
    x * p / q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_conversion_is_round_to_nearest_even() {
        // 1 + 2^-11 sits exactly between 1 and 1 + 2^-10; ties go to the even mantissa.
        let tie = 1.0f32 + 2f32.powi(-11);
        assert_eq!(tie.to_f16(), f16::ONE);
        let tie_up = 1.0f32 + 3.0 * 2f32.powi(-11);
        assert_eq!(tie_up.to_f16().to_f32(), 1.0 + 2.0 * 2f32.powi(-10));
    }

    #[test]
    fn erf_matches_between_precisions() {
        for &x in &[-3.0, -0.5, 0.0, 0.25, 1.0, 2.5] {
            let a = Scalar::erf(x as f32) as f64;
            let b = Scalar::erf(x);
            assert!((a - b).abs() < 1e-6, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn single_precision_erf_error_bound() {
        let mut worst = 0.0f64;
        for i in -60_000..=60_000 {
            let x = i as f32 * 1e-4;
            worst = worst.max((erf_f32(x) as f64 - libm::erf(x as f64)).abs());
        }
        assert!(worst < 5e-7, "{worst}");
        assert_eq!(erf_f32(0.0), 0.0);
        assert_eq!(erf_f32(-1.5), -erf_f32(1.5));
        assert!((erf_f32(f32::INFINITY) - 1.0).abs() < 5e-7);
    }
}
