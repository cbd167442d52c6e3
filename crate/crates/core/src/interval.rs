//! Rational interval arithmetic with dyadic outward rounding.
//!
//! Used to decide signs of expressions built from square roots of rationals:
//! every operation encloses the true value, endpoints are rounded outward to
//! a dyadic grid so their bit size stays proportional to the working
//! precision instead of compounding.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::radical::{dyadic_ceil, dyadic_floor, sqrt_enclosure};

#[derive(Debug, Clone)]
pub(crate) struct RatInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RatInterval {
    #[cfg(test)]
    pub fn point(q: &BigRational) -> Self {
        RatInterval {
            lo: q.clone(),
            hi: q.clone(),
        }
    }

    pub fn sqrt_of(q: &BigRational, bits: u32) -> Self {
        let (lo, hi) = sqrt_enclosure(q, bits).expect("sqrt interval of negative rational");
        RatInterval { lo, hi }
    }

    pub fn round_out(&self, bits: u32) -> Self {
        RatInterval {
            lo: dyadic_floor(&self.lo, bits),
            hi: dyadic_ceil(&self.hi, bits),
        }
    }

    #[cfg(test)]
    pub fn add(&self, other: &Self, bits: u32) -> Self {
        RatInterval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
        .round_out(bits)
    }

    pub fn sub(&self, other: &Self, bits: u32) -> Self {
        RatInterval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
        .round_out(bits)
    }

    pub fn mul(&self, other: &Self, bits: u32) -> Self {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        RatInterval { lo, hi }.round_out(bits)
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, other: &Self, bits: u32) -> Self {
        assert!(
            other.lo.is_positive() || other.hi.is_negative(),
            "interval division by an interval containing zero"
        );
        let candidates = [
            &self.lo / &other.lo,
            &self.lo / &other.hi,
            &self.hi / &other.lo,
            &self.hi / &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        RatInterval { lo, hi }.round_out(bits)
    }

    pub fn strictly_negative(&self) -> bool {
        self.hi.is_negative()
    }

    pub fn strictly_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn mid(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero_point(&self) -> bool {
        self.lo.is_zero() && self.hi.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn interval_ops_enclose() {
        let a = RatInterval::sqrt_of(&q(2, 1), 100);
        let b = RatInterval::sqrt_of(&q(3, 1), 100);
        let prod = a.mul(&b, 100);
        // sqrt(2)*sqrt(3) = sqrt(6)
        let s6 = RatInterval::sqrt_of(&q(6, 1), 120);
        assert!(prod.lo <= s6.hi && s6.lo <= prod.hi);
        let diff = a.sub(&a, 100);
        assert!(diff.contains_zero());
    }

    #[test]
    fn sign_queries() {
        let a = RatInterval::sqrt_of(&q(2, 1), 60);
        assert!(a.strictly_positive());
        let neg = RatInterval::point(&q(0, 1)).sub(&a, 60);
        assert!(neg.strictly_negative());
    }
}
