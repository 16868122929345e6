//! Scalar fields: exact rationals and 64-bit floats.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Default relative rank tolerance for float complexes.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Which field a complex commits to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ScalarMode {
    Rational,
    Float,
}

impl ScalarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::Rational => "rational",
            ScalarMode::Float => "float",
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ScalarMode;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Exact image of a float where the field allows it (every finite f64 is
    /// a dyadic rational), `None` for non-finite input.
    fn from_f64(x: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn to_rational(&self) -> BigRational;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// Zero test used by elimination. Exact for rationals.
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> BigRational {
        BigRational::from_float(*self).unwrap_or_default()
    }
}

impl Scalar for BigRational {
    const MODE: ScalarMode = ScalarMode::Rational;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn to_f64(&self) -> f64 {
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                // Huge numerators/denominators: shift both down before dividing.
                let shift = self.numer().bits().max(self.denom().bits()).saturating_sub(1000);
                let n = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                let d = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }
}

/// Absolute value as a float, for residual reporting.
pub fn abs_f64<S: Scalar>(x: &S) -> f64 {
    libm::fabs(x.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_images_are_exact() {
        let x = 0.1_f64;
        let r = BigRational::from_f64(x).unwrap();
        assert_eq!(Scalar::to_f64(&r), x);
        assert!(BigRational::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn ratios() {
        assert_eq!(BigRational::from_ratio(6, 4), BigRational::from_ratio(3, 2));
        assert_eq!(f64::from_ratio(1, 4), 0.25);
    }
}
