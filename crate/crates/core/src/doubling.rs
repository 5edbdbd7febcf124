//! Level doubling: derive the order-(n+1) table from the order-n table alone.
//!
//! A residue `f` mod `2^(n+1)` is either `b` or `b + 2^n` for a parent `b`
//! mod `2^n`. Writing `N = 2^(n+1) a + f`, the order-n branch of `b` sends
//! `N` to `3^m (2a) + t` or `3^m (2a + 1) + t`, and one more order-1 step
//! finishes the job. Whether that step halves or takes `(3x+1)/2` depends on
//! the parity of the constant term: `t` for the low child, `3^m + t` for the
//! high child. Since `3^m` is odd the two children always take opposite
//! steps, so each parent yields one child with odd count `m` and one with
//! `m + 1`.

use num_bigint::BigUint;
use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::branch::{BranchEntry, BranchTable, Budget};
use crate::error::Result;
use crate::kernel::Natural;
use crate::rational::pow3;

impl BranchTable {
    /// The order-1 table written down from the map itself: `N/2` on even
    /// residues and `(3N+1)/2` on odd ones. Seeds the doubling path without
    /// iterating anything.
    pub fn order_one() -> Self {
        BranchTable::from_parts_unchecked(
            1,
            vec![
                BranchEntry::new(1, 0, 0, Natural::zero()),
                BranchEntry::new(1, 1, 1, Natural::from(2u32)),
            ],
        )
    }
}

fn children(order: u32, parent: &BranchEntry) -> (BranchEntry, BranchEntry) {
    let child_order = order + 1;
    let m = parent.m;
    let t = parent.t.as_biguint();
    let p3 = pow3(m);
    let odd_step = |x: BigUint| (x * 3u32 + 1u32) >> 1;
    let (low, high): ((u64, BigUint), (u64, BigUint)) = if t.is_even() {
        ((m, t >> 1), (m + 1, odd_step(&p3 + t)))
    } else {
        ((m + 1, odd_step(t.clone())), (m, (&p3 + t) >> 1))
    };
    (
        BranchEntry::new(child_order, parent.b, low.0, low.1.into()),
        BranchEntry::new(
            child_order,
            parent.b + (1u64 << order),
            high.0,
            high.1.into(),
        ),
    )
}

/// Order-(n+1) table from an order-n table.
pub fn extend(table: &BranchTable, budget: Budget) -> Result<BranchTable> {
    let order = table.order();
    budget.check(order + 1)?;
    let (mut low, high): (Vec<_>, Vec<_>) = table
        .entries()
        .par_iter()
        .map(|e| children(order, e))
        .unzip();
    low.extend(high);
    Ok(BranchTable::from_parts_unchecked(order + 1, low))
}

/// Visit the tables of orders `1..=max_order` built purely by doubling.
pub fn doubling_sweep(
    max_order: u32,
    budget: Budget,
    mut visit: impl FnMut(&BranchTable) -> Result<()>,
) -> Result<()> {
    if max_order == 0 {
        return Ok(());
    }
    budget.check(max_order)?;
    let mut table = BranchTable::order_one();
    visit(&table)?;
    for _ in 1..max_order {
        table = extend(&table, budget)?;
        visit(&table)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub b: u64,
    pub direct: BranchEntry,
    pub doubled: BranchEntry,
}

/// Comparison of `extend(direct(n))` with `direct(n + 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelComparison {
    pub from_order: u32,
    pub entries: u64,
    pub first_mismatch: Option<Mismatch>,
}

impl LevelComparison {
    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DoublingReport {
    pub levels: Vec<LevelComparison>,
}

impl DoublingReport {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(LevelComparison::passed)
    }
}

/// Check `extend(build_direct(n)) == build_direct(n + 1)` for `n` in
/// `1..max(n_max - 1, 1)`, so the smallest report still covers `1 -> 2`.
pub fn verify_against_direct(n_max: u32, budget: Budget) -> Result<DoublingReport> {
    let last = n_max.saturating_sub(1).max(1);
    budget.check(last + 1)?;
    let mut report = DoublingReport::default();
    let mut current = BranchTable::build_direct(1, budget)?;
    for order in 1..=last {
        let doubled = extend(&current, budget)?;
        let direct = BranchTable::build_direct(order + 1, budget)?;
        let first_mismatch = direct
            .entries()
            .iter()
            .zip(doubled.entries())
            .find(|(d, x)| d != x)
            .map(|(d, x)| Mismatch {
                b: d.b,
                direct: d.clone(),
                doubled: x.clone(),
            });
        report.levels.push(LevelComparison {
            from_order: order,
            entries: direct.len() as u64,
            first_mismatch,
        });
        current = direct;
    }
    Ok(report)
}
