//! Exact rational timestamps.

use num::{BigRational, One, Signed, Zero};
use std::fmt;
use std::ops::Add;

/// A point on the dense, totally ordered time axis of one location.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ts(BigRational);

impl Ts {
    pub fn zero() -> Ts {
        Ts(BigRational::zero())
    }

    pub fn from_int(v: u64) -> Ts {
        Ts(BigRational::from_integer(v.into()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `self + 1`.
    pub fn succ(&self) -> Ts {
        Ts(&self.0 + BigRational::one())
    }

    /// The midpoint between two timestamps; between any two distinct points a
    /// third exists.
    pub fn mid(a: &Ts, b: &Ts) -> Ts {
        debug_assert!(a < b);
        Ts((&a.0 + &b.0) / BigRational::from_integer(2.into()))
    }

    /// `lo + (hi - lo) * num / den`, used for canonical in-gap placements.
    pub fn lerp(lo: &Ts, hi: &Ts, num: u64, den: u64) -> Ts {
        debug_assert!(lo < hi);
        let frac = BigRational::new(num.into(), den.into());
        Ts(&lo.0 + (&hi.0 - &lo.0) * frac)
    }

    pub fn is_nonneg(&self) -> bool {
        !self.0.is_negative()
    }
}

impl fmt::Debug for Ts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Ts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add<&Ts> for &Ts {
    type Output = Ts;
    fn add(self, rhs: &Ts) -> Ts {
        Ts(&self.0 + &rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_order() {
        let a = Ts::from_int(1);
        let b = Ts::from_int(2);
        let m = Ts::mid(&a, &b);
        assert!(a < m && m < b);
        let m2 = Ts::mid(&a, &m);
        assert!(a < m2 && m2 < m);
    }

    #[test]
    fn lerp_thirds() {
        let a = Ts::zero();
        let b = Ts::from_int(3);
        assert_eq!(Ts::lerp(&a, &b, 1, 3), Ts::from_int(1));
        assert_eq!(Ts::lerp(&a, &b, 2, 3), Ts::from_int(2));
    }
}
