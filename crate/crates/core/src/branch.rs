//! The order-n branch decomposition: every residue class `b mod 2^n` carries
//! an affine map `N -> A N + B` that equals `n` applications of the order-1 map.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{self, Natural};
use crate::rational::{cmp_pow3_pow2, pow3, DyadicRational, PowerRatio};

pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 26;

/// Highest order whose residues still fit the `u64` index space.
pub const MAX_ORDER: u32 = 62;

/// Cap on the number of entries a materialized table may hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_entries: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_entries: DEFAULT_MAX_ENTRIES,
        }
    }
}

impl Budget {
    pub fn new(max_entries: u64) -> Self {
        Budget { max_entries }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    pub fn check(&self, order: u32) -> Result<()> {
        check_order(order)?;
        let entries = 1u64 << order;
        if entries > self.max_entries {
            return Err(Error::BudgetExceeded {
                order,
                entries,
                limit: self.max_entries,
            });
        }
        Ok(())
    }

    /// Largest order that fits, or 0 if not even order 1 does.
    pub fn max_order(&self) -> u32 {
        (1..=MAX_ORDER)
            .take_while(|&n| (1u64 << n) <= self.max_entries)
            .last()
            .unwrap_or(0)
    }
}

pub(crate) fn check_order(order: u32) -> Result<()> {
    match order {
        0 => Err(Error::ZeroOrder),
        n if n > MAX_ORDER => Err(Error::OrderTooLarge(n)),
        _ => Ok(()),
    }
}

/// Split `N = 2^n a + b` with `0 <= b < 2^n`.
pub fn decompose(value: &Natural, order: u32) -> Result<(Natural, Natural)> {
    if value.is_zero() {
        return Err(Error::ZeroInput);
    }
    let v = value.as_biguint();
    let a = v >> order;
    let b = v - (&a << order);
    Ok((a.into(), b.into()))
}

/// One affine branch of the order-n map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchEntry {
    /// Residue (structural determinant) in `[0, 2^n)`.
    pub b: u64,
    /// Odd count over the first `n` terms of the orbit of `b`.
    pub m: u64,
    /// The `n`-th iterate of `b`.
    pub t: Natural,
    pub a_coeff: PowerRatio,
    pub b_coeff: DyadicRational,
}

impl BranchEntry {
    /// Derive `A = 3^m / 2^n` and `B = (2^n t - 3^m b) / 2^n` from `(m, t)`.
    pub fn new(order: u32, b: u64, m: u64, t: Natural) -> Self {
        let scaled_t = BigInt::from_biguint(Sign::Plus, t.as_biguint() << order);
        let scaled_b = BigInt::from_biguint(Sign::Plus, pow3(m) * b);
        BranchEntry {
            b,
            m,
            a_coeff: PowerRatio::new(m, u64::from(order)),
            b_coeff: DyadicRational::new(scaled_t - scaled_b, order),
            t,
        }
    }

    /// Branch of residue `b` computed by iterating the order-1 map.
    ///
    /// Residue 0 takes `(m, t) = (0, 0)`, which makes it the pure halving
    /// branch `N / 2^n`.
    pub fn direct(order: u32, b: u64) -> Self {
        let (m, t) = if b == 0 {
            (0, Natural::zero())
        } else {
            kernel::trace(&Natural::from(b), u64::from(order))
        };
        Self::new(order, b, m, t)
    }

    pub fn order(&self) -> u32 {
        self.b_coeff.denominator_exponent()
    }

    /// `A N + B` evaluated exactly as `(3^m N + 2^n B) / 2^n`.
    pub fn evaluate(&self, value: &Natural) -> Result<Natural> {
        let order = self.order();
        let num = BigInt::from_biguint(Sign::Plus, pow3(self.m) * value.as_biguint())
            + self.b_coeff.numerator();
        let den = BigInt::one() << order;
        let (q, r) = num.div_rem(&den);
        if !r.is_zero() || q.is_negative() {
            return Err(Error::NonIntegral { order, b: self.b });
        }
        Ok(Natural::from(q.to_biguint().expect("non-negative")))
    }
}

/// All `2^n` branches of the order-n map, indexed by residue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchTable {
    order: u32,
    entries: Vec<BranchEntry>,
}

/// Residues split by parity of their `n`-th iterate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityPartition {
    pub order: u32,
    pub even_class: Vec<u64>,
    pub odd_class: Vec<u64>,
}

impl ParityPartition {
    pub fn p(&self) -> u64 {
        self.even_class.len() as u64
    }

    pub fn q(&self) -> u64 {
        self.odd_class.len() as u64
    }
}

/// Counts of branches with slope above and below one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MagnitudeClasses {
    pub plus_count: u64,
    pub minus_count: u64,
}

/// Smallest odd count `m` with `3^m > 2^n`; a branch has `A > 1` iff `m` reaches it.
pub fn a_plus_threshold(order: u32) -> u64 {
    let n = u64::from(order);
    let mut m = 0;
    loop {
        match cmp_pow3_pow2(m, n) {
            Ordering::Greater => return m,
            Ordering::Equal => panic!("3^{m} = 2^{n} has no solution for n >= 1"),
            Ordering::Less => m += 1,
        }
    }
}

impl BranchTable {
    /// Build every branch by iterating its residue `n` times.
    pub fn build_direct(order: u32, budget: Budget) -> Result<Self> {
        budget.check(order)?;
        let entries = (0..1u64 << order)
            .into_par_iter()
            .map(|b| BranchEntry::direct(order, b))
            .collect();
        Ok(BranchTable { order, entries })
    }

    /// Assemble a table from entries, checking the structural invariants.
    pub fn from_entries(order: u32, entries: Vec<BranchEntry>) -> Result<Self> {
        check_order(order)?;
        if entries.len() as u64 != 1u64 << order {
            return Err(Error::Parse(format!(
                "order {order} needs {} entries, found {}",
                1u64 << order,
                entries.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            let expected = BranchEntry::new(order, i as u64, e.m, e.t.clone());
            if e.b != i as u64 || e.m > u64::from(order) || *e != expected {
                return Err(Error::Parse(format!(
                    "entry {i} of order {order} is inconsistent"
                )));
            }
        }
        if entries[0].m != 0 || !entries[0].t.is_zero() {
            return Err(Error::Parse("residue 0 must carry m = 0, t = 0".into()));
        }
        Ok(BranchTable { order, entries })
    }

    pub(crate) fn from_parts_unchecked(order: u32, entries: Vec<BranchEntry>) -> Self {
        BranchTable { order, entries }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn entries(&self) -> &[BranchEntry] {
        &self.entries
    }

    pub fn entry(&self, b: u64) -> Option<&BranchEntry> {
        self.entries.get(usize::try_from(b).ok()?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<BranchEntry> {
        self.entries
    }

    /// Apply the order-n map to `N` through the branch of `N mod 2^n`.
    pub fn apply(&self, value: &Natural) -> Result<Natural> {
        let (_, b) = decompose(value, self.order)?;
        let b = b.to_u64().expect("residue below 2^order");
        self.entries[b as usize].evaluate(value)
    }

    pub fn parity_partition(&self) -> ParityPartition {
        let (even_class, odd_class) = self
            .entries
            .iter()
            .map(|e| e.b)
            .partition(|&b| self.entries[b as usize].t.is_even());
        ParityPartition {
            order: self.order,
            even_class,
            odd_class,
        }
    }

    pub fn classify_magnitude(&self) -> MagnitudeClasses {
        let threshold = a_plus_threshold(self.order);
        let plus_count = self.entries.iter().filter(|e| e.m >= threshold).count() as u64;
        MagnitudeClasses {
            plus_count,
            minus_count: self.entries.len() as u64 - plus_count,
        }
    }

    /// Residues `b >= 1` whose adjustment coefficient is negative.
    ///
    /// Non-negativity is observed rather than proven, so it is reported
    /// instead of assumed.
    pub fn negative_adjustments(&self) -> Vec<u64> {
        self.entries
            .iter()
            .filter(|e| e.b >= 1 && e.b_coeff.is_negative())
            .map(|e| e.b)
            .collect()
    }

    /// Sum of the odd counts over all residues.
    pub fn odd_count_total(&self) -> BigUint {
        self.entries.iter().map(|e| BigUint::from(e.m)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{iterate_t1, odd_count};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nat(v: u64) -> Natural {
        Natural::from(v)
    }

    fn table(order: u32) -> BranchTable {
        BranchTable::build_direct(order, Budget::default()).unwrap()
    }

    fn dy(num: i64, e: u32) -> DyadicRational {
        DyadicRational::new(num, e)
    }

    #[test]
    fn decomposition() {
        assert_eq!(decompose(&nat(23), 4).unwrap(), (nat(1), nat(7)));
        assert_eq!(decompose(&nat(8), 3).unwrap(), (nat(1), nat(0)));
        assert_eq!(decompose(&nat(7), 3).unwrap(), (nat(0), nat(7)));
        assert!(matches!(
            decompose(&Natural::zero(), 3),
            Err(Error::ZeroInput)
        ));
    }

    #[test]
    fn order_one_table() {
        let t = table(1);
        let rows: Vec<_> = t
            .entries()
            .iter()
            .map(|e| (e.a_coeff, e.b_coeff.clone()))
            .collect();
        assert_eq!(
            rows,
            vec![
                (PowerRatio::new(0, 1), dy(0, 1)),
                (PowerRatio::new(1, 1), dy(1, 1))
            ]
        );
    }

    #[test]
    fn order_two_table() {
        let t = table(2);
        let expected = [(0, 1, 0), (1, 3, 1), (2, 3, 2), (3, 9, 5)];
        for (e, (b, a_num, b_num)) in t.entries().iter().zip(expected) {
            assert_eq!(e.b, b);
            assert_eq!(e.a_coeff.numerator(), BigUint::from(a_num as u32));
            assert_eq!(e.a_coeff.denominator(), BigUint::from(4u32));
            assert_eq!(e.b_coeff.numerator(), &BigInt::from(b_num));
            assert_eq!(e.b_coeff.denominator_exponent(), 2);
        }
    }

    #[test]
    fn order_three_table() {
        let t = table(3);
        let ms: Vec<u64> = t.entries().iter().map(|e| e.m).collect();
        assert_eq!(ms, [0, 2, 1, 2, 1, 1, 2, 3]);
        let bs: Vec<BigInt> = t
            .entries()
            .iter()
            .map(|e| e.b_coeff.numerator().clone())
            .collect();
        let expected: Vec<BigInt> = [0, 7, 2, 5, 4, 1, 10, 19]
            .into_iter()
            .map(BigInt::from)
            .collect();
        assert_eq!(bs, expected);
    }

    #[test]
    fn direct_entries_use_kernel_definitions() {
        for order in 1..=8u32 {
            for e in table(order).entries().iter().skip(1) {
                let b = nat(e.b);
                assert_eq!(e.m, odd_count(&b, u64::from(order) - 1).unwrap());
                assert_eq!(e.t, iterate_t1(&b, u64::from(order)).unwrap());
            }
        }
    }

    #[test]
    fn zero_residue_convention() {
        for order in 1..=10 {
            let t = table(order);
            let e = &t.entries()[0];
            assert_eq!((e.m, e.t.clone()), (0, Natural::zero()));
            assert_eq!(e.a_coeff, PowerRatio::new(0, u64::from(order)));
            assert_eq!(e.b_coeff, DyadicRational::zero(0));
        }
    }

    #[test]
    fn branch_application() {
        let t4 = table(4);
        let e = t4.entry(7).unwrap();
        assert_eq!(e.a_coeff, PowerRatio::new(3, 4));
        assert_eq!(e.b_coeff, dy(19, 4));
        assert_eq!(t4.apply(&nat(23)).unwrap(), nat(40));
        assert_eq!(nat((27 * 23 + 19) / 16), nat(40));
        assert_eq!(table(2).apply(&nat(7)).unwrap(), nat(17));
        assert_eq!(table(3).apply(&nat(8)).unwrap(), nat(1));
        assert!(matches!(t4.apply(&Natural::zero()), Err(Error::ZeroInput)));
    }

    #[test]
    fn corrupted_entry_is_non_integral() {
        let mut e = table(3).entry(5).unwrap().clone();
        e.b_coeff = dy(2, 3);
        assert!(matches!(
            e.evaluate(&nat(5)),
            Err(Error::NonIntegral { order: 3, b: 5 })
        ));
    }

    #[test]
    fn branch_matches_iteration_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for order in 1..=10 {
            let t = table(order);
            for _ in 0..200 {
                let n = nat(rng.gen_range(1..=1u64 << 40));
                assert_eq!(
                    t.apply(&n).unwrap(),
                    iterate_t1(&n, u64::from(order)).unwrap()
                );
            }
        }
    }

    #[test]
    fn parity_partitions() {
        let p1 = table(1).parity_partition();
        assert_eq!(
            (p1.even_class.clone(), p1.odd_class.clone()),
            (vec![0, 1], vec![])
        );
        let p2 = table(2).parity_partition();
        assert_eq!(
            (p2.even_class.clone(), p2.odd_class.clone()),
            (vec![0, 2, 3], vec![1])
        );
        assert_eq!((p2.p(), p2.q()), (3, 1));
        for order in 1..=12 {
            let p = table(order).parity_partition();
            assert_eq!(p.p() + p.q(), 1 << order);
            let mut all: Vec<u64> = p.even_class.iter().chain(&p.odd_class).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..1u64 << order).collect::<Vec<_>>());
        }
    }

    #[test]
    fn magnitude_classes() {
        let c = |n| {
            let m = table(n).classify_magnitude();
            (m.plus_count, m.minus_count)
        };
        assert_eq!(c(1), (1, 1));
        assert_eq!(c(2), (1, 3));
        // three branches of slope 9/8 and one of 27/8
        assert_eq!(c(3), (4, 4));
    }

    #[test]
    fn threshold_agrees_with_logarithms() {
        let log2_3 = 3f64.log2();
        for order in 1..=20u32 {
            let threshold = a_plus_threshold(order);
            for m in 0..=u64::from(order) {
                let lhs = m as f64 * log2_3 - f64::from(order);
                // well separated from zero at these sizes
                assert!(lhs.abs() > 1e-6);
                assert_eq!(m >= threshold, lhs > 0.0, "order {order}, m {m}");
                assert_eq!(
                    PowerRatio::new(m, u64::from(order)).cmp_one() == Ordering::Greater,
                    lhs > 0.0
                );
            }
        }
    }

    #[test]
    fn adjustments_are_non_negative() {
        for order in 1..=14 {
            assert!(table(order).negative_adjustments().is_empty());
        }
    }

    #[test]
    fn odd_count_histogram_is_binomial() {
        for order in 1..=16u32 {
            let t = table(order);
            let mut hist = vec![0u64; order as usize + 1];
            for e in t.entries() {
                hist[e.m as usize] += 1;
            }
            let mut row = vec![1u64];
            for _ in 0..order {
                let mut next = vec![1u64; row.len() + 1];
                for k in 1..row.len() {
                    next[k] = row[k - 1] + row[k];
                }
                row = next;
            }
            assert_eq!(hist, row, "order {order}");
        }
    }

    #[test]
    fn odd_count_total_is_n_two_to_n_minus_one() {
        for order in 1..=20u32 {
            let total = table(order).odd_count_total();
            assert_eq!(total, BigUint::from(u64::from(order) << (order - 1)));
        }
    }

    #[test]
    fn budget_refuses_large_orders() {
        let err = BranchTable::build_direct(5, Budget::new(16)).unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExceeded {
                order: 5,
                entries: 32,
                limit: 16
            }
        ));
        assert_eq!(Budget::new(16).max_order(), 4);
        assert_eq!(Budget::default().max_order(), 26);
        assert!(matches!(
            BranchTable::build_direct(0, Budget::default()),
            Err(Error::ZeroOrder)
        ));
    }

    #[test]
    fn from_entries_rejects_tampering() {
        let t = table(3);
        let mut entries = t.clone().into_entries();
        assert_eq!(BranchTable::from_entries(3, entries.clone()).unwrap(), t);
        entries[4].m += 1;
        assert!(BranchTable::from_entries(3, entries).is_err());
        assert!(BranchTable::from_entries(2, t.into_entries()).is_err());
    }
}
