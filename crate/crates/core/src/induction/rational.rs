//! Rational rotation vectors `w/q` kept exactly, without gcd reduction.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

/// `omega = (num[0], num[1]) / den`. The denominator is the construction's
/// `q_n` and is never reduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalVector {
    #[serde(with = "decimal_pair")]
    pub num: [BigInt; 2],
    #[serde(with = "decimal")]
    pub den: BigInt,
}

impl RationalVector {
    pub fn new(num: [BigInt; 2], den: BigInt) -> Result<Self> {
        if !den.is_positive() {
            return Err(Error::Domain(format!("denominator {den} must be positive")));
        }
        Ok(Self { num, den })
    }

    pub fn from_ints(a: i64, b: i64, den: u64) -> Result<Self> {
        Self::new([BigInt::from(a), BigInt::from(b)], BigInt::from(den))
    }

    pub fn components(&self) -> [BigRational; 2] {
        [
            BigRational::new(self.num[0].clone(), self.den.clone()),
            BigRational::new(self.num[1].clone(), self.den.clone()),
        ]
    }

    pub fn to_f64(&self) -> Point {
        let [a, b] = self.components();
        [a.to_f64().unwrap_or(f64::NAN), b.to_f64().unwrap_or(f64::NAN)]
    }

    /// `omega + (1, v) / (den * r)`, written over the denominator `den * r`.
    pub fn advance(&self, r: &BigInt, v: &BigInt) -> Result<Self> {
        if !r.is_positive() || !v.is_positive() {
            return Err(Error::Domain(format!("r = {r} and v = {v} must be positive")));
        }
        Self::new([&self.num[0] * r + 1, &self.num[1] * r + v], &self.den * r)
    }

    pub fn sub(&self, other: &Self) -> [BigRational; 2] {
        let a = self.components();
        let b = other.components();
        [&a[0] - &b[0], &a[1] - &b[1]]
    }

    /// Euclidean norm of `self - other`, rounded once from the exact square.
    pub fn distance(&self, other: &Self) -> f64 {
        let [d0, d1] = self.sub(other);
        let s = &d0 * &d0 + &d1 * &d1;
        s.to_f64().map(f64::sqrt).unwrap_or(f64::INFINITY)
    }

    /// `k * num mod den` per coordinate, in `[0, den)`.
    pub fn residues(&self, k: &BigInt) -> [BigInt; 2] {
        [(k * &self.num[0]).mod_floor(&self.den), (k * &self.num[1]).mod_floor(&self.den)]
    }

    /// `frac(k omega)` and `floor(k omega)`.
    pub fn split_multiple(&self, k: &BigInt) -> (Point, [BigInt; 2]) {
        let mut fr = [0.0; 2];
        let mut fl = [BigInt::zero(), BigInt::zero()];
        for t in 0..2 {
            let (q, r) = (k * &self.num[t]).div_mod_floor(&self.den);
            fr[t] = BigRational::new(r, self.den.clone()).to_f64().unwrap_or(f64::NAN);
            fl[t] = q;
        }
        (fr, fl)
    }

    /// Smallest `p >= 1` with `p omega` integral.
    pub fn period(&self) -> BigInt {
        let g = self.num[0].gcd(&self.num[1]).gcd(&self.den);
        if g.is_zero() {
            BigInt::one()
        } else {
            &self.den / g
        }
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})/{}", self.num[0], self.num[1], self.den)
    }
}

/// Arbitrary-size integers as decimal strings.
pub mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        BigInt::parse_bytes(s.as_bytes(), 10).ok_or_else(|| serde::de::Error::custom(format!("not an integer: {s:?}")))
    }
}

pub mod decimal_opt {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&x.to_str_radix(10)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
        match Option::<String>::deserialize(d)? {
            None => Ok(None),
            Some(s) => BigInt::parse_bytes(s.as_bytes(), 10)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("not an integer: {s:?}"))),
        }
    }
}

mod decimal_pair {
    use num_bigint::BigInt;
    use serde::ser::SerializeTuple;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &[BigInt; 2], s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&x[0].to_str_radix(10))?;
        t.serialize_element(&x[1].to_str_radix(10))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[BigInt; 2], D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        let p = |s: &str| {
            BigInt::parse_bytes(s.as_bytes(), 10).ok_or_else(|| serde::de::Error::custom(format!("not an integer: {s:?}")))
        };
        Ok([p(&a)?, p(&b)?])
    }
}
