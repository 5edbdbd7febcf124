//! Exact coefficient types: dyadic rationals `p / 2^e` and power ratios `3^a / 2^b`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

/// `numerator / 2^exponent`, kept unreduced.
///
/// Equality and ordering are by value, so `2/8 == 1/4`.
#[derive(Clone, Debug)]
pub struct DyadicRational {
    numerator: BigInt,
    exponent: u32,
}

impl DyadicRational {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        DyadicRational {
            numerator: numerator.into(),
            exponent,
        }
    }

    pub fn zero(exponent: u32) -> Self {
        Self::new(BigInt::zero(), exponent)
    }

    pub fn integer(value: impl Into<BigInt>) -> Self {
        Self::new(value, 0)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn denominator_exponent(&self) -> u32 {
        self.exponent
    }

    pub fn denominator(&self) -> BigUint {
        BigUint::one() << self.exponent
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    /// Same value over `2^exponent`; `None` if that would need a fractional numerator.
    pub fn with_exponent(&self, exponent: u32) -> Option<Self> {
        if exponent >= self.exponent {
            return Some(Self::new(
                &self.numerator << (exponent - self.exponent),
                exponent,
            ));
        }
        let shift = self.exponent - exponent;
        let divisible = self.numerator.is_zero()
            || self.numerator.magnitude().trailing_zeros().unwrap_or(0) >= u64::from(shift);
        if divisible {
            Some(Self::new(&self.numerator >> shift, exponent))
        } else {
            None
        }
    }

    /// Lowest-terms form (odd numerator or zero exponent; zero is `0/1`).
    pub fn reduced(&self) -> Self {
        if self.numerator.is_zero() {
            return Self::zero(0);
        }
        let twos = self
            .numerator
            .magnitude()
            .trailing_zeros()
            .map_or(0, |z| z.min(u64::from(self.exponent)) as u32);
        Self::new(&self.numerator >> twos, self.exponent - twos)
    }

    pub fn to_integer(&self) -> Option<BigInt> {
        self.with_exponent(0).map(|d| d.numerator)
    }

    /// Divide by `2^k` without touching the numerator.
    pub fn halve(&self, k: u32) -> Self {
        Self::new(self.numerator.clone(), self.exponent + k)
    }

    /// Lossy, for human-facing displays only.
    pub fn to_f64_approx(&self) -> f64 {
        let r = self.reduced();
        let num: f64 = r.numerator.to_string().parse().unwrap_or(f64::NAN);
        num / 2f64.powi(r.exponent as i32)
    }
}

impl PartialEq for DyadicRational {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DyadicRational {}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let lhs = &self.numerator << (e - self.exponent);
        let rhs = &other.numerator << (e - other.exponent);
        lhs.cmp(&rhs)
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;

    fn add(self, rhs: Self) -> DyadicRational {
        let e = self.exponent.max(rhs.exponent);
        let lhs = &self.numerator << (e - self.exponent);
        let r = &rhs.numerator << (e - rhs.exponent);
        DyadicRational::new(lhs + r, e)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        if r.exponent == 0 {
            write!(f, "{}", r.numerator)
        } else {
            write!(f, "{}/{}", r.numerator, r.denominator())
        }
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `3^e3 / 2^e2`, never expanded unless asked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PowerRatio {
    pub e3: u64,
    pub e2: u64,
}

impl PowerRatio {
    pub const ONE: PowerRatio = PowerRatio { e3: 0, e2: 0 };

    pub fn new(e3: u64, e2: u64) -> Self {
        PowerRatio { e3, e2 }
    }

    pub fn numerator(&self) -> BigUint {
        pow3(self.e3)
    }

    pub fn denominator(&self) -> BigUint {
        BigUint::one() << self.e2
    }

    /// Exact comparison against 1, i.e. `3^e3` against `2^e2`.
    pub fn cmp_one(&self) -> Ordering {
        cmp_pow3_pow2(self.e3, self.e2)
    }

    pub fn product(self, other: PowerRatio) -> PowerRatio {
        PowerRatio::new(self.e3 + other.e3, self.e2 + other.e2)
    }

    /// Lossy, for human-facing displays only.
    pub fn log2_approx(&self) -> f64 {
        self.e3 as f64 * 3f64.log2() - self.e2 as f64
    }
}

impl PartialOrd for PowerRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PowerRatio {
    /// `3^a / 2^b` against `3^c / 2^d` is `3^(a-c)` against `2^(b-d)` with
    /// negative exponents moved across.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, c) = (self.e3, other.e3);
        let (b, d) = (self.e2, other.e2);
        match (a >= c, b >= d) {
            (true, true) => cmp_pow3_pow2(a - c, b - d),
            (false, false) => cmp_pow3_pow2(c - a, d - b).reverse(),
            // 3^x · 2^y against 1 with x, y >= 0 and not both zero
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
        }
    }
}

impl fmt::Display for PowerRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "3^{}/2^{}", self.e3, self.e2)
    }
}

pub fn pow3(e: u64) -> BigUint {
    BigUint::from(3u32).pow(u32::try_from(e).expect("power of three exponent exceeds u32"))
}

/// Exact `3^a` against `2^b`.
///
/// Both exponents are first divided by their gcd, which preserves the order
/// since `x -> x^g` is strictly increasing; the reduced powers are then
/// compared as big integers.
pub fn cmp_pow3_pow2(a: u64, b: u64) -> Ordering {
    let g = a.gcd(&b);
    if g == 0 {
        return Ordering::Equal;
    }
    let (a, b) = (a / g, b / g);
    if a == 0 {
        // 1 against 2^b with b > 0
        return Ordering::Less;
    }
    pow3(a).cmp(&(BigUint::one() << b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_equality_ignores_representation() {
        assert_eq!(DyadicRational::new(2, 3), DyadicRational::new(1, 2));
        assert_ne!(DyadicRational::new(3, 3), DyadicRational::new(1, 2));
        assert_eq!(DyadicRational::new(0, 7), DyadicRational::zero(0));
    }

    #[test]
    fn display_is_reduced() {
        assert_eq!(DyadicRational::new(2, 3).to_string(), "1/4");
        assert_eq!(DyadicRational::new(16, 2).to_string(), "4");
        assert_eq!(DyadicRational::new(-6, 3).to_string(), "-3/4");
        assert_eq!(DyadicRational::new(0, 5).to_string(), "0");
    }

    #[test]
    fn exponent_changes() {
        let half = DyadicRational::new(1, 1);
        assert_eq!(half.with_exponent(3).unwrap().numerator(), &BigInt::from(4));
        assert!(half.with_exponent(0).is_none());
        assert_eq!(
            DyadicRational::new(12, 2).to_integer(),
            Some(BigInt::from(3))
        );
    }

    #[test]
    fn sums_align_denominators() {
        let s = &DyadicRational::new(1, 2) + &DyadicRational::new(3, 1);
        assert_eq!(s, DyadicRational::new(7, 2));
    }

    #[test]
    fn power_ratio_against_one() {
        assert_eq!(PowerRatio::new(1, 1).cmp_one(), Ordering::Greater);
        assert_eq!(PowerRatio::new(0, 1).cmp_one(), Ordering::Less);
        assert_eq!(PowerRatio::new(2, 3).cmp_one(), Ordering::Greater);
        assert_eq!(PowerRatio::new(1, 2).cmp_one(), Ordering::Less);
        assert_eq!(PowerRatio::ONE.cmp_one(), Ordering::Equal);
        // K at order 20 reduces to 3 against 4
        assert_eq!(
            PowerRatio::new(20 << 19, 20 << 20).cmp_one(),
            Ordering::Less
        );
        // 3^12 = 531441 > 2^18 = 262144, 3^12 < 2^20
        assert_eq!(cmp_pow3_pow2(12, 18), Ordering::Greater);
        assert_eq!(cmp_pow3_pow2(12, 20), Ordering::Less);
    }

    #[test]
    fn power_ratio_ordering() {
        let k2 = PowerRatio::new(4, 8);
        let k3 = PowerRatio::new(12, 24);
        assert!(k3 < k2);
        assert!(PowerRatio::new(3, 4) > PowerRatio::new(0, 4));
        assert!(PowerRatio::new(0, 1) < PowerRatio::new(1, 0));
    }

    proptest! {
        #[test]
        fn cmp_matches_direct_expansion(a in 0u64..200, b in 0u64..400) {
            let direct = pow3(a).cmp(&(BigUint::one() << b));
            prop_assert_eq!(cmp_pow3_pow2(a, b), direct);
        }

        #[test]
        fn ratio_order_matches_cross_multiplication(
            a in 0u64..60, b in 0u64..100, c in 0u64..60, d in 0u64..100
        ) {
            let x = PowerRatio::new(a, b);
            let y = PowerRatio::new(c, d);
            let lhs = pow3(a) << d;
            let rhs = pow3(c) << b;
            prop_assert_eq!(x.cmp(&y), lhs.cmp(&rhs));
        }

        #[test]
        fn dyadic_order_matches_cross_multiplication(
            p in -10_000i64..10_000, e in 0u32..20, q in -10_000i64..10_000, f in 0u32..20
        ) {
            let x = DyadicRational::new(p, e);
            let y = DyadicRational::new(q, f);
            let lhs = i128::from(p) << f;
            let rhs = i128::from(q) << e;
            prop_assert_eq!(x.cmp(&y), lhs.cmp(&rhs));
            prop_assert_eq!(x.reduced(), x);
        }
    }
}
