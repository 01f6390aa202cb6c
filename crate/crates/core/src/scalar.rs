//! Scalar abstraction shared by the sector-level algorithms.
//!
//! Everything that only needs field arithmetic and ordering (eigenvalue
//! tables, partial-transpose spectra, the GHZ-diagonal QFI formula, the
//! correlation tensor) is written against [`Scalar`], so the same code runs on
//! exact rationals and on machine floats.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Ordered field element usable in GHZ-sector computations.
pub trait Scalar:
    Signed + PartialOrd + FromPrimitive + ToPrimitive + Clone + Debug + Display + Send + Sync + 'static
{
    /// `true` when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;

    /// Nearest representable value of an exact rational.
    fn from_rational(value: &BigRational) -> Self;

    /// Absolute tolerance used for invariant checks (zero for exact types).
    fn tolerance() -> Self;

    /// Serialized form used by the JSON state schema.
    fn to_wire(&self) -> String;

    fn from_wire(text: &str) -> Option<Self>;

    fn from_int(value: i64) -> Self {
        // i64 -> field is always representable (possibly rounded for floats).
        Self::from_i64(value).expect("integer conversion")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    /// `self >= other` up to the type's tolerance.
    fn approx_ge(&self, other: &Self) -> bool {
        self.clone() + Self::tolerance() >= *other
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn to_wire(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn from_wire(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((num, den)) => {
                let num = BigInt::from_str(num.trim()).ok()?;
                let den = BigInt::from_str(den.trim()).ok()?;
                if den.is_zero() {
                    return None;
                }
                Some(BigRational::new(num, den))
            }
            None => BigInt::from_str(text).ok().map(BigRational::from_integer),
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(value: &BigRational) -> Self {
        value.to_f64().unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        1e-12
    }

    fn to_wire(&self) -> String {
        format!("{self:e}")
    }

    fn from_wire(text: &str) -> Option<Self> {
        text.trim().parse().ok()
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(value: &BigRational) -> Self {
        value.to_f32().unwrap_or(f32::NAN)
    }

    fn tolerance() -> Self {
        1e-5
    }

    fn to_wire(&self) -> String {
        format!("{self:e}")
    }

    fn from_wire(text: &str) -> Option<Self> {
        text.trim().parse().ok()
    }
}

/// Shorthand for building exact rationals from machine integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Compensated (Kahan) running sum. Exact scalars never accumulate a
/// compensation term, so the result is the plain sum there.
#[derive(Clone, Debug)]
pub struct CompensatedSum<S: Scalar> {
    sum: S,
    carry: S,
}

impl<S: Scalar> Default for CompensatedSum<S> {
    fn default() -> Self {
        Self { sum: S::zero(), carry: S::zero() }
    }
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn add(&mut self, value: S) {
        if S::EXACT {
            self.sum = self.sum.clone() + value;
            return;
        }
        let y = value - self.carry.clone();
        let t = self.sum.clone() + y.clone();
        self.carry = (t.clone() - self.sum.clone()) - y;
        self.sum = t;
    }

    pub fn total(self) -> S {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_wire_round_trip() {
        let x = ratio(-7, 22);
        assert_eq!(x.to_wire(), "-7/22");
        assert_eq!(BigRational::from_wire("-7/22"), Some(x));
        assert_eq!(BigRational::from_wire("3"), Some(ratio(3, 1)));
        assert_eq!(BigRational::from_wire("1/0"), None);
        assert_eq!(BigRational::from_wire("0.5"), None);
    }

    #[test]
    fn kahan_beats_naive_summation() {
        let mut acc = CompensatedSum::<f64>::default();
        let mut naive = 0.0f64;
        acc.add(1.0);
        naive += 1.0;
        for _ in 0..1_000_000 {
            acc.add(1e-16);
            naive += 1e-16;
        }
        let exact = 1.0 + 1e-10;
        assert!((acc.total() - exact).abs() < 1e-15);
        assert!((naive - exact).abs() > 1e-11);
    }

    #[test]
    fn exact_approx_eq_is_equality() {
        assert!(ratio(1, 3).approx_eq(&ratio(2, 6)));
        assert!(!ratio(1, 3).approx_eq(&ratio(1, 4)));
        assert!(0.1f64.approx_eq(&(0.3 - 0.2)));
    }
}
