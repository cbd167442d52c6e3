//! Crate-wide scalar: exact rational, exact radical sum, or approximate real.
//!
//! Exact arithmetic is closed under `+`, `-`, `*` and under `/` by rationals
//! (and single-term radicals); any operation touching an approximate operand
//! yields an approximate result. JSON form: `"p/q"` string for rationals, a
//! `{"radical": [...]}` object for radical sums, a plain number for
//! approximate values.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::radical::RadicalSum;

/// Default tolerance for approximate-mode comparisons.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Arithmetic mode carried by CLI entry points and approximate kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Exact,
    Approx { eps: f64 },
}

impl Mode {
    pub fn approx_default() -> Mode {
        Mode::Approx { eps: DEFAULT_EPS }
    }

    pub fn eps(&self) -> f64 {
        match self {
            Mode::Exact => 0.0,
            Mode::Approx { eps } => *eps,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Scalar {
    /// Arbitrary-precision rational.
    Exact(BigRational),
    /// Exact sum of rational multiples of square roots.
    Radical(RadicalSum),
    /// Approximate real.
    Approx(f64),
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Scalar {
        Scalar::Exact(BigRational::one())
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Scalar {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(q: BigRational) -> Scalar {
        Scalar::Exact(q)
    }

    /// Collapses a radical sum that happens to be rational.
    pub fn from_radical(r: RadicalSum) -> Scalar {
        match r.as_rational() {
            Some(q) => Scalar::Exact(q),
            None => Scalar::Radical(r),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Scalar::Approx(_))
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Scalar::Exact(q) => Some(q.clone()),
            Scalar::Radical(r) => r.as_rational(),
            Scalar::Approx(_) => None,
        }
    }

    fn as_radical(&self) -> Option<RadicalSum> {
        match self {
            Scalar::Exact(q) => Some(RadicalSum::from_rational(q.clone())),
            Scalar::Radical(r) => Some(r.clone()),
            Scalar::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Scalar::Radical(r) => r.to_f64(),
            Scalar::Approx(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Radical(r) => r.is_zero(),
            Scalar::Approx(x) => *x == 0.0,
        }
    }

    /// Sign as -1/0/+1; certified for exact variants.
    pub fn sign(&self) -> i8 {
        match self {
            Scalar::Exact(q) => {
                if q.is_zero() {
                    0
                } else if q.is_positive() {
                    1
                } else {
                    -1
                }
            }
            Scalar::Radical(r) => r.sign(),
            Scalar::Approx(x) => {
                if *x == 0.0 {
                    0
                } else if *x > 0.0 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign() < 0
    }

    /// Equality up to `eps` for approximate operands, exact otherwise.
    pub fn approx_eq(&self, other: &Scalar, eps: f64) -> bool {
        match (self.is_exact(), other.is_exact()) {
            (true, true) => self == other,
            _ => (self.to_f64() - other.to_f64()).abs() <= eps,
        }
    }

    /// Exact square root when the operand is exact and nonnegative.
    pub fn sqrt(&self) -> Result<Scalar> {
        match self {
            Scalar::Exact(q) => Ok(Scalar::from_radical(RadicalSum::sqrt_rational(q)?)),
            Scalar::Radical(_) => Err(Error::InexactDivision(
                "nested square root of a radical sum".into(),
            )),
            Scalar::Approx(x) => {
                if *x < 0.0 {
                    Err(Error::InexactDivision(format!("sqrt of negative {x}")))
                } else {
                    Ok(Scalar::Approx(x.sqrt()))
                }
            }
        }
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        if other.is_zero() {
            return Err(Error::InexactDivision("division by zero".into()));
        }
        match (self, other) {
            (Scalar::Approx(_), _) | (_, Scalar::Approx(_)) => {
                Ok(Scalar::Approx(self.to_f64() / other.to_f64()))
            }
            (a, Scalar::Exact(q)) => {
                let inv = Scalar::Exact(q.recip());
                Ok(a * &inv)
            }
            (a, Scalar::Radical(r)) => {
                let inv = Scalar::from_radical(r.recip()?);
                Ok(a * &inv)
            }
        }
    }

    /// Nonnegative integer power.
    pub fn pow(&self, mut n: usize) -> Scalar {
        let mut base = self.clone();
        let mut out = Scalar::one();
        while n > 0 {
            if n & 1 == 1 {
                out = &out * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        out
    }

    pub fn abs(&self) -> Scalar {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{q}"),
            Scalar::Radical(r) => write!(f, "{r}"),
            Scalar::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            (Scalar::Approx(_), _) | (_, Scalar::Approx(_)) => {
                Scalar::Approx(self.to_f64() + rhs.to_f64())
            }
            _ => {
                let (a, b) = (self.as_radical().unwrap(), rhs.as_radical().unwrap());
                Scalar::from_radical(a.add(&b))
            }
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self + &(-rhs)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Radical(r) => Scalar::Radical(r.neg()),
            Scalar::Approx(x) => Scalar::Approx(-x),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            (Scalar::Approx(_), _) | (_, Scalar::Approx(_)) => {
                Scalar::Approx(self.to_f64() * rhs.to_f64())
            }
            _ => {
                let (a, b) = (self.as_radical().unwrap(), rhs.as_radical().unwrap());
                Scalar::from_radical(a.mul(&b))
            }
        }
    }
}

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self.checked_div(rhs)
            .expect("exact division failed; use checked_div on fallible paths")
    }
}

macro_rules! owned_ops {
    ($($trait:ident, $method:ident);*) => {$(
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    )*};
}
owned_ops!(Add, add; Sub, sub; Mul, mul; Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            (Scalar::Approx(_), _) | (_, Scalar::Approx(_)) => {
                let (a, b) = (self.to_f64(), other.to_f64());
                a.partial_cmp(&b)
                    .expect("NaN scalar encountered in comparison")
            }
            _ => {
                let diff = self - other;
                match diff.sign() {
                    0 => Ordering::Equal,
                    s if s > 0 => Ordering::Greater,
                    _ => Ordering::Less,
                }
            }
        }
    }
}

fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|e| format!("bad numerator: {e}"))?;
        let d = BigInt::from_str(den.trim()).map_err(|e| format!("bad denominator: {e}"))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(BigRational::new(n, d))
    } else {
        let n = BigInt::from_str(s).map_err(|e| format!("bad integer: {e}"))?;
        Ok(BigRational::from_integer(n))
    }
}

impl FromStr for Scalar {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_rational(s).map(Scalar::Exact)
    }
}

#[derive(Serialize, Deserialize)]
struct RadicalTermJson {
    coef: String,
    sqrt: String,
}

#[derive(Serialize, Deserialize)]
struct RadicalJson {
    radical: Vec<RadicalTermJson>,
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(q) => serializer.serialize_str(&q.to_string()),
            Scalar::Approx(x) => serializer.serialize_f64(*x),
            Scalar::Radical(r) => {
                let terms = r
                    .terms()
                    .map(|(rad, coef)| RadicalTermJson {
                        coef: coef.to_string(),
                        sqrt: rad.to_string(),
                    })
                    .collect();
                RadicalJson { radical: terms }.serialize(serializer)
            }
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde_json_value_shim::ScalarRepr;
        match ScalarRepr::deserialize(deserializer)? {
            ScalarRepr::Text(s) => parse_rational(&s)
                .map(Scalar::Exact)
                .map_err(D::Error::custom),
            ScalarRepr::Number(x) => Ok(Scalar::Approx(x)),
            ScalarRepr::Radical(r) => {
                let mut sum = RadicalSum::zero();
                for term in r.radical {
                    let coef = parse_rational(&term.coef).map_err(D::Error::custom)?;
                    let rad = BigUint::from_str(&term.sqrt)
                        .map_err(|e| D::Error::custom(format!("bad radicand: {e}")))?;
                    let sqrt = RadicalSum::sqrt_rational(&BigRational::from_integer(BigInt::from(
                        rad,
                    )))
                    .map_err(D::Error::custom)?;
                    sum = sum.add(&sqrt.scale(&coef));
                }
                Ok(Scalar::from_radical(sum))
            }
        }
    }
}

mod serde_json_value_shim {
    use super::RadicalJson;
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub enum ScalarRepr {
        Text(String),
        Number(f64),
        Radical(RadicalJson),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_promotion() {
        let a = Scalar::ratio(1, 4);
        let b = Scalar::ratio(3, 4);
        assert_eq!(&a + &b, Scalar::one());
        let r = Scalar::ratio(3, 1).sqrt().unwrap();
        assert!(matches!(r, Scalar::Radical(_)));
        // sqrt(3)*sqrt(3) collapses back to an exact rational
        assert_eq!(&r * &r, Scalar::from_int(3));
        let x = &a + &Scalar::Approx(0.25);
        assert!(matches!(x, Scalar::Approx(_)));
        assert!((x.to_f64() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perfect_square_sqrt_is_exact() {
        assert_eq!(Scalar::ratio(9, 4).sqrt().unwrap(), Scalar::ratio(3, 2));
    }

    #[test]
    fn ordering_mixed_variants() {
        let sqrt2 = Scalar::from_int(2).sqrt().unwrap();
        assert!(Scalar::from_int(1) < sqrt2);
        assert!(sqrt2 < Scalar::from_int(2));
        assert_eq!(sqrt2.cmp(&sqrt2), Ordering::Equal);
    }

    #[test]
    fn json_round_trip() {
        let vals = vec![
            Scalar::ratio(-7, 3),
            Scalar::from_int(5),
            Scalar::ratio(3, 4).sqrt().unwrap(),
            Scalar::Approx(0.125),
        ];
        let text = serde_json::to_string(&vals).unwrap();
        let back: Vec<Scalar> = serde_json::from_str(&text).unwrap();
        assert_eq!(vals, back);
    }

    #[test]
    fn parses_integer_and_fraction_strings() {
        let a: Scalar = "5".parse().unwrap();
        assert_eq!(a, Scalar::from_int(5));
        let b: Scalar = "-3/6".parse().unwrap();
        assert_eq!(b, Scalar::ratio(-1, 2));
        let c: Scalar = serde_json::from_str("\"1/4\"").unwrap();
        assert_eq!(c, Scalar::ratio(1, 4));
    }
}
