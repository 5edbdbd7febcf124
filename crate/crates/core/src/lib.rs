//! Exact order-n Collatz branch tables.
//!
//! The order-n map applies `T(N) = N/2 | (3N+1)/2` exactly `n` times. On each
//! residue class `b mod 2^n` it is affine, `N -> (3^m / 2^n) N + B`, where
//! `m` counts the odd values among the first `n` terms of the orbit of `b`.
//! This crate builds those branches two independent ways (direct iteration
//! and level doubling), aggregates the product `K_n`, slope sum `S_n` and
//! intercept sum `R_n` over all branches with exact big-integer arithmetic,
//! and checks them against their closed forms
//! `K_n = (3/4)^(n 2^(n-1))`, `S_n = 2^n`, `R_n = n 2^(n-2)`.
//!
//! ```
//! use collatz_core::{BranchTable, Budget, Natural};
//!
//! let table = BranchTable::build_direct(4, Budget::default()).unwrap();
//! let branch = table.entry(7).unwrap();
//! assert_eq!(branch.b_coeff.to_string(), "19/16");
//! assert_eq!(table.apply(&Natural::from(23u32)).unwrap(), Natural::from(40u32));
//! ```

pub mod branch;
pub mod checkpoint;
pub mod doubling;
pub mod error;
pub mod export;
pub mod global;
pub mod kernel;
pub mod rational;
pub mod verify;

pub use branch::{
    a_plus_threshold, decompose, BranchEntry, BranchTable, Budget, MagnitudeClasses,
    ParityPartition, DEFAULT_MAX_ENTRIES, MAX_ORDER,
};
pub use doubling::{doubling_sweep, extend, verify_against_direct, DoublingReport};
pub use error::{Error, Result};
pub use global::{
    aggregate, aggregate_with, check_recurrences, check_theorems, corollary_stats,
    k_strictly_decreases, measure_levels, ChunkPartial, CorollaryStats, GlobalCoefficients,
    SweepConfig, SweepOutcome,
};
pub use kernel::{iterate_t1, odd_count, sequence, step_t1, CollatzSequence, Natural};
pub use rational::{DyadicRational, PowerRatio};
pub use verify::{run_verification, CheckLine, VerificationReport, VerifyOptions};
