//! One pass over every identity, flattened into pass/fail report lines.

use std::fmt;

use serde::Serialize;

use crate::branch::Budget;
use crate::doubling::verify_against_direct;
use crate::error::Result;
use crate::global::{
    check_recurrences, compare_with_closed_form, corollary_stats, k_strictly_decreases,
    measure_levels, AggregationPath, GlobalCoefficients, SweepConfig,
};
use crate::rational::DyadicRational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckLine {
    pub check: String,
    pub order: Option<u32>,
    pub measured: String,
    pub expected: String,
    pub passed: bool,
}

impl CheckLine {
    fn new(
        check: &str,
        order: Option<u32>,
        measured: impl fmt::Display,
        expected: impl fmt::Display,
        passed: bool,
    ) -> Self {
        CheckLine {
            check: check.to_string(),
            order,
            measured: measured.to_string(),
            expected: expected.to_string(),
            passed,
        }
    }

    fn equal<T: PartialEq + fmt::Display>(
        check: &str,
        order: u32,
        measured: T,
        expected: T,
    ) -> Self {
        let passed = measured == expected;
        Self::new(check, Some(order), measured, expected, passed)
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "pass" } else { "FAIL" };
        let order = self.order.map(|n| format!("n={n}")).unwrap_or_default();
        write!(
            f,
            "{status:<4}  {:<22} {order:<5} measured={} expected={}",
            self.check, self.measured, self.expected
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub max_order: u32,
    pub passed: bool,
    pub lines: Vec<CheckLine>,
    pub levels: Vec<GlobalCoefficients>,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub budget: Budget,
    pub sweep: SweepConfig,
}

fn pair(g: &GlobalCoefficients) -> String {
    format!("({},{})", g.k_coeff.e3, g.k_coeff.e2)
}

/// Closed forms, recurrences, corollaries, the doubling/direct equivalence
/// and adjustment signs for every order in `1..=n_max`.
pub fn run_verification(n_max: u32, options: &VerifyOptions) -> Result<VerificationReport> {
    let measured = measure_levels(n_max, options.budget, &options.sweep)?;
    let mut lines = Vec::new();

    for level in &measured {
        let row = compare_with_closed_form(level)?;
        let (m, e) = (&row.measured, &row.expected);
        let n = row.order;
        lines.push(CheckLine::new(
            "closed form K (e3,e2)",
            Some(n),
            pair(m),
            pair(e),
            row.k_ok,
        ));
        lines.push(CheckLine::new(
            "closed form S",
            Some(n),
            &m.s_coeff,
            &e.s_coeff,
            row.s_ok,
        ));
        lines.push(CheckLine::new(
            "closed form R",
            Some(n),
            &m.r_coeff,
            &e.r_coeff,
            row.r_ok,
        ));
        lines.push(CheckLine::new(
            "closed form Z",
            Some(n),
            m.z_sum,
            e.z_sum,
            row.z_ok,
        ));
        if let AggregationPath::CrossChecked { agree } = level.path {
            lines.push(CheckLine::new(
                "doubling = streaming",
                Some(n),
                if agree { "equal" } else { "differ" },
                "equal",
                agree,
            ));
        }
        if let Some(neg) = &level.negative_adjustments {
            let shown = match neg.first() {
                None => "none".to_string(),
                Some(b) => format!("{} (first b={b})", neg.len()),
            };
            lines.push(CheckLine::new(
                "negative B (b>=1)",
                Some(n),
                shown,
                "none",
                neg.is_empty(),
            ));
        }
        let stats = corollary_stats(m);
        lines.push(CheckLine::equal(
            "mean A",
            n,
            stats.mean_a,
            DyadicRational::integer(1),
        ));
        lines.push(CheckLine::equal(
            "mean B",
            n,
            stats.mean_b,
            DyadicRational::new(n, 2),
        ));
    }

    let levels: Vec<GlobalCoefficients> = measured.into_iter().map(|l| l.coefficients).collect();
    for row in check_recurrences(&levels) {
        let n = Some(row.order);
        let status = |ok: bool| if ok { "holds" } else { "broken" };
        lines.push(CheckLine::new(
            "recurrence S",
            n,
            status(row.s_ok),
            "holds",
            row.s_ok,
        ));
        lines.push(CheckLine::new(
            "recurrence R",
            n,
            status(row.r_ok),
            "holds",
            row.r_ok,
        ));
        lines.push(CheckLine::new(
            "recurrence Z",
            n,
            status(row.z_ok),
            "holds",
            row.z_ok,
        ));
    }
    for w in levels.windows(2) {
        let ok = k_strictly_decreases(&w[0], &w[1]);
        lines.push(CheckLine::new(
            "K strictly decreases",
            Some(w[0].order),
            format!("{} -> {}", pair(&w[0]), pair(&w[1])),
            "K(n+1) < K(n)",
            ok,
        ));
    }

    let direct_max = n_max.min(options.budget.max_order());
    if direct_max >= 2 {
        for level in verify_against_direct(direct_max, options.budget)?.levels {
            let measured = match &level.first_mismatch {
                None => format!("{} entries equal", level.entries),
                Some(m) => format!("first mismatch at b={}", m.b),
            };
            lines.push(CheckLine::new(
                "doubling = direct",
                Some(level.from_order + 1),
                measured,
                "all entries equal",
                level.passed(),
            ));
        }
    }

    let passed = lines.iter().all(|l| l.passed);
    Ok(VerificationReport {
        max_order: n_max,
        passed,
        lines,
        levels,
    })
}
