//! The order-1 Collatz map `T(N) = N/2` (even) or `(3N+1)/2` (odd), its
//! iterates, compressed sequences of any structural order, and odd counts.
//!
//! Values start on a `u64` fast path and move to arbitrary precision the
//! moment a step would overflow, so results are exact at every magnitude.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision non-negative integer.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Natural(BigUint);

impl Natural {
    pub fn zero() -> Self {
        Natural(BigUint::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_even(&self) -> bool {
        self.0.is_even()
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn into_biguint(self) -> BigUint {
        self.0
    }
}

impl From<u64> for Natural {
    fn from(v: u64) -> Self {
        Natural(BigUint::from(v))
    }
}

impl From<u32> for Natural {
    fn from(v: u32) -> Self {
        Natural(BigUint::from(v))
    }
}

impl From<BigUint> for Natural {
    fn from(v: BigUint) -> Self {
        Natural(v)
    }
}

impl fmt::Display for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for Natural {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<BigUint>()
            .map(Natural)
            .map_err(|_| Error::Parse(format!("not a non-negative integer: {s:?}")))
    }
}

impl Serialize for Natural {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Natural {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Orbit under the order-`order` map, seed stored as term 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollatzSequence {
    pub order: u32,
    pub terms: Vec<Natural>,
}

#[inline]
fn step_small(x: u64) -> Option<u64> {
    if x & 1 == 0 {
        Some(x >> 1)
    } else {
        // (3x+1)/2 == x + (x+1)/2 for odd x
        x.checked_add((x >> 1) + 1)
    }
}

#[inline]
fn step_big(x: &mut BigUint) {
    if x.is_odd() {
        *x *= 3u32;
        *x += 1u32;
    }
    *x >>= 1;
}

fn check_positive(n: &Natural) -> Result<()> {
    if n.is_zero() {
        Err(Error::ZeroInput)
    } else {
        Ok(())
    }
}

pub fn step_t1(n: &Natural) -> Result<Natural> {
    iterate_t1(n, 1)
}

/// `k`-th iterate of [`step_t1`]; `k = 0` is the identity.
pub fn iterate_t1(n: &Natural, k: u64) -> Result<Natural> {
    check_positive(n)?;
    Ok(iterate_unchecked(n, k))
}

fn iterate_unchecked(n: &Natural, k: u64) -> Natural {
    let mut remaining = k;
    let mut big = match n.to_u64() {
        Some(mut x) => {
            while remaining > 0 {
                match step_small(x) {
                    Some(y) => {
                        x = y;
                        remaining -= 1;
                    }
                    None => break,
                }
            }
            if remaining == 0 {
                return Natural::from(x);
            }
            BigUint::from(x)
        }
        None => n.0.clone(),
    };
    for _ in 0..remaining {
        step_big(&mut big);
    }
    Natural(big)
}

/// Arbitrary-precision-only iteration; the oracle the `u64` fast path must match.
#[doc(hidden)]
pub fn iterate_t1_reference(n: &Natural, k: u64) -> Result<Natural> {
    check_positive(n)?;
    let mut x = n.0.clone();
    for _ in 0..k {
        step_big(&mut x);
    }
    Ok(Natural(x))
}

/// Number of odd values among the `k + 1` terms `p, T(p), ..., T^k(p)`.
pub fn odd_count(p: &Natural, k: u64) -> Result<u64> {
    check_positive(p)?;
    Ok(trace(p, k + 1).0)
}

/// Odd count over the first `steps` terms together with term number `steps`.
///
/// For a residue `b` and `steps = n` this is the pair `(m, t)` that fixes the
/// affine branch `3^m a + t` of the order-n map on `2^n a + b`. Zero is
/// handled by the natural extension `T(0) = 0`, which yields `(0, 0)`.
pub(crate) fn trace(p: &Natural, steps: u64) -> (u64, Natural) {
    let mut odd = 0u64;
    let mut remaining = steps;
    let mut big = match p.to_u64() {
        Some(mut x) => {
            while remaining > 0 {
                let y = match step_small(x) {
                    Some(y) => y,
                    None => break,
                };
                odd += x & 1;
                x = y;
                remaining -= 1;
            }
            if remaining == 0 {
                return (odd, Natural::from(x));
            }
            BigUint::from(x)
        }
        None => p.0.clone(),
    };
    for _ in 0..remaining {
        if big.is_odd() {
            odd += 1;
        }
        step_big(&mut big);
    }
    (odd, Natural(big))
}

/// `length + 1` terms of the orbit under the order-`order` map.
pub fn sequence(p: &Natural, order: u32, length: usize) -> Result<CollatzSequence> {
    check_positive(p)?;
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    let mut terms = Vec::with_capacity(length + 1);
    terms.push(p.clone());
    for _ in 0..length {
        let next = iterate_unchecked(terms.last().unwrap(), u64::from(order));
        terms.push(next);
    }
    Ok(CollatzSequence { order, terms })
}
