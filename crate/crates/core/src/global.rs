//! Global characteristic coefficients of the order-n map.
//!
//! Over all residues `b` of order `n`:
//!
//! * `K_n = prod A = 3^Z / 2^(n 2^n)` with `Z = sum m`
//! * `S_n = sum A = (sum 3^m) / 2^n`
//! * `R_n = sum B = (sum (2^n t - 3^m b)) / 2^n`
//!
//! Sums are accumulated exactly over chunks of residues, so a sweep never
//! needs the whole table in memory and can be resumed from a checkpoint.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::PathBuf;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::branch::{a_plus_threshold, check_order, BranchTable, Budget};
use crate::checkpoint::{self, CheckpointWriter};
use crate::doubling::doubling_sweep;
use crate::error::{Error, Result};
use crate::kernel::{self, Natural};
use crate::rational::{pow3, DyadicRational, PowerRatio};

pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlobalCoefficients {
    pub order: u32,
    pub k_coeff: PowerRatio,
    pub s_coeff: DyadicRational,
    pub r_coeff: DyadicRational,
    pub z_sum: u64,
    /// Residues with an even `n`-th iterate. Not available from the closed forms.
    pub p_count: Option<u64>,
    pub q_count: Option<u64>,
    pub a_plus_count: Option<u64>,
}

/// Exact partial sums over the residues `start..end`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkPartial {
    pub start: u64,
    pub end: u64,
    pub z: u64,
    pub s_num: BigUint,
    pub r_num: BigInt,
    pub p: u64,
    pub a_plus: u64,
}

impl ChunkPartial {
    fn empty(start: u64, end: u64) -> Self {
        ChunkPartial {
            start,
            end,
            z: 0,
            s_num: BigUint::zero(),
            r_num: BigInt::zero(),
            p: 0,
            a_plus: 0,
        }
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Fold `other` in. Sums are exact, so the result is independent of merge order.
    pub fn merge(mut self, other: &ChunkPartial) -> ChunkPartial {
        self.start = self.start.min(other.start);
        self.end = self.end.max(other.end);
        self.z += other.z;
        self.s_num += &other.s_num;
        self.r_num += &other.r_num;
        self.p += other.p;
        self.a_plus += other.a_plus;
        self
    }
}

/// Walk the residues `start..end` of order `order`.
pub fn compute_chunk(order: u32, start: u64, end: u64) -> ChunkPartial {
    let threshold = a_plus_threshold(order);
    let powers: Vec<BigUint> = (0..=u64::from(order)).map(pow3).collect();
    let mut acc = ChunkPartial::empty(start, end);
    let mut sum_t = BigUint::zero();
    let mut sum_3b = BigUint::zero();
    for b in start..end {
        let (m, t) = if b == 0 {
            (0, Natural::zero())
        } else {
            kernel::trace(&Natural::from(b), u64::from(order))
        };
        let p3 = &powers[m as usize];
        acc.z += m;
        acc.s_num += p3;
        sum_t += t.as_biguint();
        sum_3b += p3 * b;
        if t.is_even() {
            acc.p += 1;
        }
        if m >= threshold {
            acc.a_plus += 1;
        }
    }
    acc.r_num =
        BigInt::from_biguint(Sign::Plus, sum_t << order) - BigInt::from_biguint(Sign::Plus, sum_3b);
    acc
}

impl GlobalCoefficients {
    fn from_totals(order: u32, total: &ChunkPartial) -> Self {
        let residues = 1u64 << order;
        GlobalCoefficients {
            order,
            k_coeff: PowerRatio::new(total.z, u64::from(order) * residues),
            s_coeff: DyadicRational::new(BigInt::from(total.s_num.clone()), order),
            r_coeff: DyadicRational::new(total.r_num.clone(), order),
            z_sum: total.z,
            p_count: Some(total.p),
            q_count: Some(residues - total.p),
            a_plus_count: Some(total.a_plus),
        }
    }

    /// Combine chunk partials that tile `0..2^order` exactly once.
    pub fn from_partials<'a>(
        order: u32,
        partials: impl IntoIterator<Item = &'a ChunkPartial>,
    ) -> Result<Self> {
        let mut parts: Vec<&ChunkPartial> = partials.into_iter().collect();
        parts.sort_by_key(|c| c.start);
        let mut cursor = 0u64;
        for c in &parts {
            if c.start != cursor || c.end < c.start {
                return Err(Error::Parse(format!(
                    "chunks of order {order} do not tile the residues at {cursor}"
                )));
            }
            cursor = c.end;
        }
        if cursor != 1u64 << order {
            return Err(Error::Parse(format!(
                "chunks of order {order} stop at {cursor} of {}",
                1u64 << order
            )));
        }
        let total = parts
            .iter()
            .fold(ChunkPartial::empty(0, 0), |acc, c| acc.merge(c));
        Ok(Self::from_totals(order, &total))
    }

    /// Aggregate a materialized table.
    pub fn from_table(table: &BranchTable) -> Self {
        let order = table.order();
        let powers: Vec<BigUint> = (0..=u64::from(order)).map(pow3).collect();
        let mut total = ChunkPartial::empty(0, table.len() as u64);
        for e in table.entries() {
            total.z += e.m;
            total.s_num += &powers[e.m as usize];
            total.r_num += e.b_coeff.numerator();
            if e.t.is_even() {
                total.p += 1;
            }
        }
        total.a_plus = table.classify_magnitude().plus_count;
        Self::from_totals(order, &total)
    }

    /// The proven closed forms: `Z = n 2^(n-1)`, `K = (3/4)^Z`, `S = 2^n`, `R = n 2^(n-2)`.
    pub fn closed_form(order: u32) -> Result<Self> {
        check_order(order)?;
        let n = u64::from(order);
        let z = n << (order - 1);
        Ok(GlobalCoefficients {
            order,
            k_coeff: PowerRatio::new(z, n << order),
            s_coeff: DyadicRational::new(BigInt::one() << (2 * order), order),
            r_coeff: DyadicRational::new(BigInt::from(n) << (2 * order - 2), order),
            z_sum: z,
            p_count: None,
            q_count: None,
            a_plus_count: None,
        })
    }
}

/// Streaming sweep settings.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub chunk_size: u64,
    /// Append finished chunks here and skip chunks already recorded.
    pub checkpoint: Option<PathBuf>,
    /// Stop after this many newly computed chunks.
    pub chunk_limit: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            chunk_size: DEFAULT_CHUNK_SIZE,
            checkpoint: None,
            chunk_limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SweepOutcome {
    Complete(GlobalCoefficients),
    Interrupted {
        completed_chunks: usize,
        total_chunks: usize,
    },
}

/// Exhaustive streaming aggregation with the default configuration.
pub fn aggregate(order: u32) -> Result<GlobalCoefficients> {
    match aggregate_with(order, &SweepConfig::default())? {
        SweepOutcome::Complete(g) => Ok(g),
        SweepOutcome::Interrupted { .. } => unreachable!("no chunk limit set"),
    }
}

pub fn aggregate_with(order: u32, config: &SweepConfig) -> Result<SweepOutcome> {
    check_order(order)?;
    let residues = 1u64 << order;
    let chunk = config.chunk_size.clamp(1, residues);
    let ranges: Vec<(u64, u64)> = (0..residues)
        .step_by(chunk as usize)
        .map(|s| (s, (s + chunk).min(residues)))
        .collect();
    let total_chunks = ranges.len();

    let mut finished: HashMap<u64, ChunkPartial> = HashMap::new();
    let mut already_done = false;
    let mut writer = None;
    if let Some(path) = &config.checkpoint {
        let state = checkpoint::read(path, order)?;
        for rec in state.records {
            let expected_end = (rec.start + chunk).min(residues);
            if rec.start % chunk != 0 || rec.end != expected_end {
                return Err(Error::Checkpoint {
                    path: path.clone(),
                    message: format!(
                        "chunk {}..{} does not match chunk size {chunk}",
                        rec.start, rec.end
                    ),
                });
            }
            if finished.insert(rec.start, rec).is_some() {
                return Err(Error::Checkpoint {
                    path: path.clone(),
                    message: "duplicate chunk record".into(),
                });
            }
        }
        if state.done && finished.len() != total_chunks {
            return Err(Error::Checkpoint {
                path: path.clone(),
                message: format!(
                    "DONE {order} with only {} of {total_chunks} chunks",
                    finished.len()
                ),
            });
        }
        already_done = state.done;
        writer = Some(CheckpointWriter::open(path)?);
    }

    let pending: Vec<(u64, u64)> = ranges
        .iter()
        .copied()
        .filter(|(s, _)| !finished.contains_key(s))
        .collect();
    let budget = config.chunk_limit.unwrap_or(usize::MAX).min(pending.len());
    let wave = rayon::current_num_threads().max(1) * 4;
    for batch in pending[..budget].chunks(wave) {
        let results: Vec<ChunkPartial> = batch
            .par_iter()
            .map(|&(s, e)| compute_chunk(order, s, e))
            .collect();
        for r in results {
            if let Some(w) = writer.as_mut() {
                w.record(order, &r)?;
            }
            finished.insert(r.start, r);
        }
    }

    if finished.len() < total_chunks {
        return Ok(SweepOutcome::Interrupted {
            completed_chunks: finished.len(),
            total_chunks,
        });
    }
    if let (Some(w), false) = (writer.as_mut(), already_done) {
        w.done(order)?;
    }
    GlobalCoefficients::from_partials(order, finished.values()).map(SweepOutcome::Complete)
}

/// How a level's coefficients were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationPath {
    /// Table built by doubling from order 1, then summed.
    Doubling,
    /// Per-residue streaming sweep.
    Streaming,
    /// Both of the above, required to agree.
    CrossChecked { agree: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeasuredLevel {
    pub coefficients: GlobalCoefficients,
    pub path: AggregationPath,
    /// Residues `b >= 1` with a negative adjustment, when a table was materialized.
    pub negative_adjustments: Option<Vec<u64>>,
}

/// Coefficients for orders `1..=n_max`: the doubling path while tables fit
/// the budget, streaming above it, and both at the last level that fits.
pub fn measure_levels(
    n_max: u32,
    budget: Budget,
    sweep: &SweepConfig,
) -> Result<Vec<MeasuredLevel>> {
    check_order(n_max)?;
    let boundary = budget.max_order().min(n_max);
    let mut levels = Vec::with_capacity(n_max as usize);
    doubling_sweep(boundary, budget, |table| {
        levels.push(MeasuredLevel {
            coefficients: GlobalCoefficients::from_table(table),
            path: AggregationPath::Doubling,
            negative_adjustments: Some(table.negative_adjustments()),
        });
        Ok(())
    })?;
    if let Some(last) = levels.last_mut() {
        let streamed = stream_complete(boundary, sweep)?;
        last.path = AggregationPath::CrossChecked {
            agree: streamed == last.coefficients,
        };
    }
    for order in boundary + 1..=n_max {
        levels.push(MeasuredLevel {
            coefficients: stream_complete(order, sweep)?,
            path: AggregationPath::Streaming,
            negative_adjustments: None,
        });
    }
    Ok(levels)
}

fn stream_complete(order: u32, sweep: &SweepConfig) -> Result<GlobalCoefficients> {
    let config = SweepConfig {
        chunk_limit: None,
        ..sweep.clone()
    };
    match aggregate_with(order, &config)? {
        SweepOutcome::Complete(g) => Ok(g),
        SweepOutcome::Interrupted { .. } => unreachable!("no chunk limit set"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoremRow {
    pub order: u32,
    pub path: AggregationPath,
    pub measured: GlobalCoefficients,
    pub expected: GlobalCoefficients,
    pub k_ok: bool,
    pub s_ok: bool,
    pub r_ok: bool,
    pub z_ok: bool,
}

impl TheoremRow {
    pub fn passed(&self) -> bool {
        let cross = !matches!(self.path, AggregationPath::CrossChecked { agree: false });
        self.k_ok && self.s_ok && self.r_ok && self.z_ok && cross
    }
}

pub fn compare_with_closed_form(level: &MeasuredLevel) -> Result<TheoremRow> {
    let measured = level.coefficients.clone();
    let expected = GlobalCoefficients::closed_form(measured.order)?;
    Ok(TheoremRow {
        order: measured.order,
        path: level.path,
        k_ok: measured.k_coeff == expected.k_coeff,
        s_ok: measured.s_coeff == expected.s_coeff,
        r_ok: measured.r_coeff == expected.r_coeff,
        z_ok: measured.z_sum == expected.z_sum,
        measured,
        expected,
    })
}

/// Aggregate every order in `1..=n_max` and hold it against the closed forms.
pub fn check_theorems(n_max: u32, budget: Budget, sweep: &SweepConfig) -> Result<Vec<TheoremRow>> {
    measure_levels(n_max, budget, sweep)?
        .iter()
        .map(compare_with_closed_form)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecurrenceRow {
    /// The step checked is `order -> order + 1`.
    pub order: u32,
    pub s_ok: bool,
    pub r_ok: bool,
    pub z_ok: bool,
}

impl RecurrenceRow {
    pub fn passed(&self) -> bool {
        self.s_ok && self.r_ok && self.z_ok
    }
}

/// `S' = 2S`, `R' = 2^(n-1) + 2R`, `Z' = 2Z + 2^n` across consecutive levels.
pub fn check_recurrences(levels: &[GlobalCoefficients]) -> Vec<RecurrenceRow> {
    levels
        .windows(2)
        .filter(|w| w[1].order == w[0].order + 1)
        .map(|w| {
            let (cur, next) = (&w[0], &w[1]);
            let n = cur.order;
            let doubled = |x: &DyadicRational| {
                DyadicRational::new(x.numerator() * 2, x.denominator_exponent())
            };
            // 2^(n-1) is 1/2 at n = 1
            let r_shift = DyadicRational::new(BigInt::one() << n, 1);
            RecurrenceRow {
                order: n,
                s_ok: next.s_coeff == doubled(&cur.s_coeff),
                r_ok: next.r_coeff == &r_shift + &doubled(&cur.r_coeff),
                z_ok: u128::from(next.z_sum) == 2 * u128::from(cur.z_sum) + (1u128 << n),
            }
        })
        .collect()
}

/// Strict decrease `K_(n+1) < K_n`.
pub fn k_strictly_decreases(cur: &GlobalCoefficients, next: &GlobalCoefficients) -> bool {
    next.k_coeff.cmp(&cur.k_coeff) == Ordering::Less
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorollaryStats {
    pub order: u32,
    /// `S_n / 2^n`.
    pub mean_a: DyadicRational,
    /// `R_n / 2^n`.
    pub mean_b: DyadicRational,
    /// `K_n` as its exponent pair.
    pub log_k: PowerRatio,
    /// Sign of `log K_n`, decided exactly.
    pub log_k_sign: i8,
    pub a_plus_fraction: Option<DyadicRational>,
}

pub fn corollary_stats(g: &GlobalCoefficients) -> CorollaryStats {
    let n = g.order;
    CorollaryStats {
        order: n,
        mean_a: g.s_coeff.halve(n),
        mean_b: g.r_coeff.halve(n),
        log_k: g.k_coeff,
        log_k_sign: match g.k_coeff.cmp_one() {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        },
        a_plus_fraction: g.a_plus_count.map(|c| DyadicRational::new(c, n)),
    }
}
