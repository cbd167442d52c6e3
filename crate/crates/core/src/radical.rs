//! Exact arithmetic on finite sums `sum_t c_t * sqrt(k_t)` with rational `c_t`
//! and positive integer radicands `k_t`.
//!
//! Values of this shape are closed under addition and multiplication, which is
//! all the certified paths need (quadratic forms, products of recovered
//! densities, moment identities). Division is only supported by rationals and
//! by single-term sums. Sign queries are answered by certified rational
//! interval enclosures of each square root, tightened until the sign is
//! unambiguous; equality is decided structurally on the canonical form.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Splits `n` into `(s, m)` with `n = s^2 * m` and `m` square-reduced.
///
/// Square factors are found by trial division up to a fixed bound plus a
/// perfect-square check on the remainder. A square factor made entirely of
/// primes beyond the bound survives unreduced; canonical equality then only
/// holds within values built through the same constructors, which is the case
/// everywhere in this crate.
fn square_extract(n: &BigUint) -> (BigUint, BigUint) {
    let one = BigUint::one();
    if n.is_zero() || *n == one {
        return (one, n.clone());
    }
    let mut rem = n.clone();
    let mut square_part = BigUint::one();
    let mut reduced = BigUint::one();
    let mut divisor = BigUint::from(2u32);
    let bound = BigUint::from(10_000u32);
    while &divisor * &divisor <= rem && divisor <= bound {
        let mut count = 0u32;
        while (&rem % &divisor).is_zero() {
            rem /= &divisor;
            count += 1;
        }
        if count > 0 {
            square_part *= divisor.pow(count / 2);
            if count % 2 == 1 {
                reduced *= &divisor;
            }
        }
        divisor += 1u32;
    }
    if !rem.is_one() {
        let root = rem.sqrt();
        if &root * &root == rem {
            square_part *= root;
        } else {
            reduced *= rem;
        }
    }
    (square_part, reduced)
}

/// Floor of `r * 2^bits` over `2^bits`; rounds a rational down onto a dyadic
/// grid so interval endpoints stay small through long computations.
pub(crate) fn dyadic_floor(r: &BigRational, bits: u32) -> BigRational {
    let scaled = r * BigRational::from_integer(BigInt::one() << bits);
    BigRational::new(scaled.floor().to_integer(), BigInt::one() << bits)
}

pub(crate) fn dyadic_ceil(r: &BigRational, bits: u32) -> BigRational {
    let scaled = r * BigRational::from_integer(BigInt::one() << bits);
    BigRational::new(scaled.ceil().to_integer(), BigInt::one() << bits)
}

/// Certified enclosure `lo <= sqrt(q) <= hi` with `hi - lo <= 2^-bits * max(1, hi)`.
pub(crate) fn sqrt_enclosure(q: &BigRational, bits: u32) -> Result<(BigRational, BigRational)> {
    if q.is_negative() {
        return Err(Error::InexactDivision(format!(
            "square root of negative rational {q}"
        )));
    }
    if q.is_zero() {
        return Ok((BigRational::zero(), BigRational::zero()));
    }
    // Initial upper bound from bit lengths: 2^ceil(b/2) >= sqrt(n) for n < 2^b.
    let num_bits = q.numer().bits();
    let den_bits = q.denom().bits();
    let exp = ((num_bits as i64 + 2 - den_bits as i64) + 1).div_euclid(2).max(1);
    let mut hi = BigRational::from_integer(BigInt::one() << (exp as u32));
    debug_assert!(&hi * &hi >= *q);
    let two = BigRational::from_integer(BigInt::from(2));
    let work_bits = bits + 4;
    loop {
        // Newton step stays an upper bound; rounding up keeps it one.
        let next = (&hi + q / &hi) / &two;
        hi = dyadic_ceil(&next, work_bits);
        let lo = dyadic_floor(&(q / &hi), work_bits);
        let width = &hi - &lo;
        let scale = if hi > BigRational::one() {
            hi.clone()
        } else {
            BigRational::one()
        };
        if width * BigRational::from_integer(BigInt::one() << bits) <= scale {
            return Ok((lo, hi));
        }
    }
}

/// Canonical finite sum of rational multiples of square roots of positive
/// integers. Radicand 1 carries the rational part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadicalSum {
    terms: BTreeMap<BigUint, BigRational>,
}

impl RadicalSum {
    pub fn zero() -> Self {
        RadicalSum {
            terms: BTreeMap::new(),
        }
    }

    pub fn from_rational(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(BigUint::one(), q);
        }
        RadicalSum { terms }
    }

    /// Exact `sqrt(q)` for `q >= 0`: `sqrt(n/d) = sqrt(n*d)/d`, with the
    /// square part of `n*d` pulled into the coefficient.
    pub fn sqrt_rational(q: &BigRational) -> Result<Self> {
        if q.is_negative() {
            return Err(Error::InexactDivision(format!("sqrt of negative {q}")));
        }
        if q.is_zero() {
            return Ok(Self::zero());
        }
        let n = q.numer().magnitude();
        let d = q.denom().magnitude();
        let nd = n * d;
        let (s, m) = square_extract(&nd);
        let coef = BigRational::new(BigInt::from(s), BigInt::from(d.clone()));
        let mut terms = BTreeMap::new();
        terms.insert(m, coef);
        Ok(RadicalSum { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(q)` when the value lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&BigUint::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (rad, c) in &other.terms {
            let entry = terms.entry(rad.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(rad);
            }
        }
        RadicalSum { terms }
    }

    pub fn neg(&self) -> Self {
        RadicalSum {
            terms: self
                .terms
                .iter()
                .map(|(rad, c)| (rad.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        RadicalSum {
            terms: self
                .terms
                .iter()
                .map(|(rad, c)| (rad.clone(), c * q))
                .collect(),
        }
    }

    /// `sqrt(a) * sqrt(b) = g * sqrt(a*b / g^2)` with `g = gcd(a, b)`; for
    /// canonical (square-reduced) radicands the product radicand is again
    /// square-reduced, so no factorization is needed here.
    pub fn mul(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<BigUint, BigRational> = BTreeMap::new();
        for (ra, ca) in &self.terms {
            for (rb, cb) in &other.terms {
                let g = ra.gcd(rb);
                let rad = (ra / &g) * (rb / &g);
                let coef = ca * cb * BigRational::from_integer(BigInt::from(g));
                let entry = acc.entry(rad.clone()).or_insert_with(BigRational::zero);
                *entry += coef;
                if entry.is_zero() {
                    acc.remove(&rad);
                }
            }
        }
        RadicalSum { terms: acc }
    }

    /// Reciprocal for single-term sums `c*sqrt(k)`: `1/(c*sqrt(k)) = sqrt(k)/(c*k)`.
    pub fn recip(&self) -> Result<Self> {
        if self.terms.len() != 1 {
            return Err(Error::InexactDivision(format!(
                "reciprocal of a {}-term radical sum",
                self.terms.len()
            )));
        }
        let (rad, coef) = self.terms.iter().next().unwrap();
        let denom = coef * BigRational::from_integer(BigInt::from(rad.clone()));
        let mut terms = BTreeMap::new();
        terms.insert(rad.clone(), denom.recip());
        Ok(RadicalSum { terms })
    }

    /// Certified enclosure of the value.
    pub fn enclosure(&self, bits: u32) -> Result<(BigRational, BigRational)> {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for (rad, coef) in &self.terms {
            if rad.is_one() {
                lo += coef;
                hi += coef;
                continue;
            }
            let r = BigRational::from_integer(BigInt::from(rad.clone()));
            let (slo, shi) = sqrt_enclosure(&r, bits)?;
            if coef.is_positive() {
                lo += coef * &slo;
                hi += coef * &shi;
            } else {
                lo += coef * &shi;
                hi += coef * &slo;
            }
        }
        Ok((dyadic_floor(&lo, bits + 4), dyadic_ceil(&hi, bits + 4)))
    }

    /// Exact sign: -1, 0, +1. Structural zero is decided on the canonical
    /// form; otherwise intervals are tightened until the sign shows.
    pub fn sign(&self) -> i8 {
        if self.terms.is_empty() {
            return 0;
        }
        if self.terms.values().all(|c| c.is_positive()) {
            return 1;
        }
        if self.terms.values().all(|c| c.is_negative()) {
            return -1;
        }
        let mut bits = 64u32;
        loop {
            let (lo, hi) = self
                .enclosure(bits)
                .expect("radicands are nonnegative by construction");
            if lo.is_positive() {
                return 1;
            }
            if hi.is_negative() {
                return -1;
            }
            bits *= 2;
            assert!(
                bits <= 1 << 16,
                "sign of radical sum undecided at 65536 bits; \
                 non-canonical zero representation suspected: {self}"
            );
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(rad, c)| {
                let r = BigRational::from_integer(BigInt::from(rad.clone()));
                c.to_f64().unwrap_or(f64::NAN) * r.to_f64().unwrap_or(f64::NAN).sqrt()
            })
            .sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigUint, &BigRational)> {
        self.terms.iter()
    }
}

impl fmt::Display for RadicalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (rad, coef) in &self.terms {
            if !first && coef.is_positive() {
                write!(f, "+")?;
            }
            if rad.is_one() {
                write!(f, "{coef}")?;
            } else if coef.is_one() {
                write!(f, "sqrt({rad})")?;
            } else if *coef == -BigRational::one() {
                write!(f, "-sqrt({rad})")?;
            } else {
                write!(f, "{coef}*sqrt({rad})")?;
            }
            first = false;
        }
        Ok(())
    }
}
