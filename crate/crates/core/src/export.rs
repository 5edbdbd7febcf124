//! CSV, JSON and text renderings of branch tables, complete tables and sequences.
//!
//! Every rational is written as a numerator/denominator pair of decimal
//! integers; coefficients stay unreduced over `2^n`.

use std::io::{Read, Write};

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::branch::{BranchEntry, BranchTable, Budget};
use crate::error::{Error, Result};
use crate::kernel::{self, CollatzSequence, Natural};
use crate::rational::{DyadicRational, PowerRatio};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Text,
}

/// One branch as it appears on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub b: u64,
    pub m: u64,
    pub t: String,
    #[serde(rename = "A_num")]
    pub a_num: String,
    #[serde(rename = "A_den")]
    pub a_den: String,
    #[serde(rename = "B_num")]
    pub b_num: String,
    #[serde(rename = "B_den")]
    pub b_den: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableDocument {
    order: u32,
    entries: Vec<TableRow>,
}

impl From<&BranchEntry> for TableRow {
    fn from(e: &BranchEntry) -> Self {
        TableRow {
            b: e.b,
            m: e.m,
            t: e.t.to_string(),
            a_num: e.a_coeff.numerator().to_string(),
            a_den: e.a_coeff.denominator().to_string(),
            b_num: e.b_coeff.numerator().to_string(),
            b_den: e.b_coeff.denominator().to_string(),
        }
    }
}

fn parse_big<T: std::str::FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("{field}: not an integer: {value:?}")))
}

/// Exponent `e` with `2^e == value`.
fn power_of_two_exponent(field: &str, value: &str) -> Result<u32> {
    let v: BigUint = parse_big(field, value)?;
    let e = v.trailing_zeros().unwrap_or(0);
    if v != BigUint::one() << e {
        return Err(Error::Parse(format!(
            "{field}: {value} is not a power of two"
        )));
    }
    Ok(e as u32)
}

impl TableRow {
    fn to_entry(&self, order: u32) -> Result<BranchEntry> {
        let t: Natural = self.t.parse()?;
        let entry = BranchEntry::new(order, self.b, self.m, t);
        let a_order = power_of_two_exponent("A_den", &self.a_den)?;
        let b_order = power_of_two_exponent("B_den", &self.b_den)?;
        let a_num: BigUint = parse_big("A_num", &self.a_num)?;
        let b_num: BigInt = parse_big("B_num", &self.b_num)?;
        if a_order != order
            || b_order != order
            || a_num != entry.a_coeff.numerator()
            || &b_num != entry.b_coeff.numerator()
        {
            return Err(Error::Parse(format!(
                "row b={} has inconsistent coefficients",
                self.b
            )));
        }
        Ok(entry)
    }
}

fn rows_to_table(rows: Vec<TableRow>) -> Result<BranchTable> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Parse("empty table".into()))?;
    let order = power_of_two_exponent("A_den", &first.a_den)?;
    let entries = rows
        .iter()
        .map(|r| r.to_entry(order))
        .collect::<Result<Vec<_>>>()?;
    BranchTable::from_entries(order, entries)
}

pub fn write_table_csv<W: Write>(table: &BranchTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in table.entries() {
        w.serialize(TableRow::from(e))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_table_csv<R: Read>(input: R) -> Result<BranchTable> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["b", "m", "t", "A_num", "A_den", "B_num", "B_den"] {
        return Err(Error::Parse(format!("unexpected header {headers:?}")));
    }
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<TableRow>, _>>()?;
    rows_to_table(rows)
}

pub fn write_table_json<W: Write>(table: &BranchTable, out: W) -> Result<()> {
    let doc = TableDocument {
        order: table.order(),
        entries: table.entries().iter().map(TableRow::from).collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_table_json<R: Read>(input: R) -> Result<BranchTable> {
    let doc: TableDocument = serde_json::from_reader(input)?;
    let table = rows_to_table(doc.entries)?;
    if table.order() != doc.order {
        return Err(Error::Parse(format!(
            "declared order {} but rows are of order {}",
            doc.order,
            table.order()
        )));
    }
    Ok(table)
}

/// Aligned columns with the affine form `A N + B` spelled out.
pub fn write_table_text<W: Write>(table: &BranchTable, mut out: W) -> std::io::Result<()> {
    let den = BigUint::one() << table.order();
    writeln!(out, "order {} ({} branches)", table.order(), table.len())?;
    writeln!(out, "{:>8} {:>4} {:>12}  T^n(N)", "b", "m", "t")?;
    for e in table.entries() {
        writeln!(
            out,
            "{:>8} {:>4} {:>12}  {}/{} N + {}/{}",
            e.b,
            e.m,
            e.t,
            e.a_coeff.numerator(),
            den,
            e.b_coeff.numerator(),
            den
        )?;
    }
    Ok(())
}

/// Seeds `1..=2^n`, their first `n` iterates and cumulative coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompleteCollatzTable {
    pub order: u32,
    pub rows: Vec<CompleteRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompleteRow {
    pub seed: u64,
    /// `T^1(P), ..., T^n(P)`.
    pub iterates: Vec<Natural>,
    /// Cumulative principal coefficient, the slope of the seed's branch.
    pub f: PowerRatio,
    /// Cumulative secondary coefficient, the intercept of the seed's branch.
    pub phi: DyadicRational,
}

impl CompleteCollatzTable {
    /// With `rotated`, the seed `2^n` comes first and the rest follow in
    /// increasing order; otherwise rows run `1..=2^n`.
    pub fn build(order: u32, budget: Budget, rotated: bool) -> Result<Self> {
        let table = BranchTable::build_direct(order, budget)?;
        let top = 1u64 << order;
        let seeds: Box<dyn Iterator<Item = u64>> = if rotated {
            Box::new(std::iter::once(top).chain(1..top))
        } else {
            Box::new(1..=top)
        };
        let rows = seeds
            .map(|seed| {
                let seq = kernel::sequence(&Natural::from(seed), 1, order as usize)?;
                let e = &table.entries()[(seed % top) as usize];
                Ok(CompleteRow {
                    seed,
                    iterates: seq.terms[1..].to_vec(),
                    f: e.a_coeff,
                    phi: e.b_coeff.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompleteCollatzTable { order, rows })
    }

    /// Seeds whose last iterate differs from `F P + phi`.
    pub fn inconsistent_rows(&self) -> Vec<u64> {
        self.rows
            .iter()
            .filter(|r| {
                let lhs = BigInt::from(r.iterates.last().unwrap().as_biguint().clone())
                    << r.phi.denominator_exponent();
                let rhs = BigInt::from(r.f.numerator() * r.seed) + r.phi.numerator();
                lhs != rhs
            })
            .map(|r| r.seed)
            .collect()
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["P".to_string()];
        h.extend((1..=self.order).map(|k| format!("T{k}")));
        h.extend(["F_num", "F_den", "phi_num", "phi_den"].map(String::from));
        h
    }

    fn record(row: &CompleteRow) -> Vec<String> {
        let mut rec = vec![row.seed.to_string()];
        rec.extend(row.iterates.iter().map(Natural::to_string));
        rec.push(row.f.numerator().to_string());
        rec.push(row.f.denominator().to_string());
        rec.push(row.phi.numerator().to_string());
        rec.push(row.phi.denominator().to_string());
        rec
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            w.write_record(Self::record(row))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let header = self.header();
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                header
                    .iter()
                    .cloned()
                    .zip(Self::record(row).into_iter().map(serde_json::Value::String))
                    .collect()
            })
            .collect();
        serde_json::to_writer_pretty(
            out,
            &serde_json::json!({ "order": self.order, "rows": rows }),
        )?;
        Ok(())
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header().join("\t"))?;
        for row in &self.rows {
            writeln!(out, "{}", Self::record(row).join("\t"))?;
        }
        Ok(())
    }
}

pub fn write_sequence<W: Write>(seq: &CollatzSequence, format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Text => {
            let terms: Vec<String> = seq.terms.iter().map(Natural::to_string).collect();
            writeln!(out, "{}", terms.join(" ")).map_err(|e| Error::io("<output>", e))?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["j", "term"])?;
            for (j, t) in seq.terms.iter().enumerate() {
                w.write_record([j.to_string(), t.to_string()])?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Format::Json => {
            let doc = serde_json::json!({
                "seed": seq.terms[0].to_string(),
                "order": seq.order,
                "terms": seq.terms.iter().map(Natural::to_string).collect::<Vec<_>>(),
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out).map_err(|e| Error::io("<output>", e))?;
        }
    }
    Ok(())
}

/// Order-1 terms `T^1 .. T^(order·length)` of `seed` in one row per order
/// `k = 1..=order`, each showing only the terms its compressed sequence visits.
pub fn sequence_grid(seed: &Natural, order: u32, length: usize) -> Result<Vec<Vec<String>>> {
    let flat = kernel::sequence(seed, 1, order as usize * length)?;
    let mut rows = Vec::with_capacity(order as usize + 1);
    let mut header = vec!["j".to_string()];
    header.extend((1..flat.terms.len()).map(|j| j.to_string()));
    rows.push(header);
    for k in 1..=order as usize {
        let mut row = vec![format!("T^{k}")];
        row.extend(flat.terms.iter().enumerate().skip(1).map(|(j, t)| {
            if j % k == 0 {
                t.to_string()
            } else {
                String::new()
            }
        }));
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_grid<W: Write>(grid: &[Vec<String>], format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in grid {
                w.write_record(row)?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, grid)?;
            writeln!(out).map_err(|e| Error::io("<output>", e))?;
        }
        Format::Text => {
            let width = grid.iter().flatten().map(String::len).max().unwrap_or(1);
            for row in grid {
                let cells: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
                writeln!(out, "{}", cells.join(" ").trim_end())
                    .map_err(|e| Error::io("<output>", e))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(order: u32) -> BranchTable {
        BranchTable::build_direct(order, Budget::default()).unwrap()
    }

    fn csv_lines(order: u32) -> Vec<String> {
        let mut buf = Vec::new();
        write_table_csv(&table(order), &mut buf).unwrap();
        String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(String::from)
            .collect()
    }

    #[test]
    fn csv_rows() {
        let two = csv_lines(2);
        assert_eq!(two[0], "b,m,t,A_num,A_den,B_num,B_den");
        assert_eq!(two[4], "3,2,8,9,4,5,4");
        assert_eq!(csv_lines(3)[8], "7,3,26,27,8,19,8");
        assert_eq!(csv_lines(1)[1], "0,0,0,1,2,0,2");
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let mut buf = Vec::new();
        write_table_json(&table(2), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["order"], 2);
        assert_eq!(v["entries"][3]["B_num"], "5");
        assert_eq!(v["entries"][3]["A_den"], "4");
        assert_eq!(v["entries"][3]["m"], 2);
    }

    #[test]
    fn parse_rejects_inconsistent_rows() {
        let text = "b,m,t,A_num,A_den,B_num,B_den\n0,0,0,1,2,0,2\n1,1,2,3,2,2,2\n";
        assert!(read_table_csv(text.as_bytes()).is_err());
        let text = "b,m,t,A_num,A_den,B_num,B_den\n0,0,0,1,3,0,3\n1,1,2,3,3,1,3\n";
        assert!(read_table_csv(text.as_bytes()).is_err());
        let text = "b,m,t\n0,0,0\n";
        assert!(read_table_csv(text.as_bytes()).is_err());
        let good = "b,m,t,A_num,A_den,B_num,B_den\n0,0,0,1,2,0,2\n1,1,2,3,2,1,2\n";
        assert_eq!(read_table_csv(good.as_bytes()).unwrap(), table(1));
    }

    #[test]
    fn complete_table_rows() {
        let two = CompleteCollatzTable::build(2, Budget::default(), false).unwrap();
        let mut buf = Vec::new();
        two.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P,T1,T2,F_num,F_den,phi_num,phi_den");
        assert_eq!(lines[3], "3,5,8,9,4,5,4");
        assert_eq!(lines[4], "4,2,1,1,4,0,4");

        let one = CompleteCollatzTable::build(1, Budget::default(), false).unwrap();
        let mut buf = Vec::new();
        one.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().nth(1),
            Some("1,2,3,2,1,2")
        );
    }

    #[test]
    fn rotated_complete_table_starts_at_top_seed() {
        let t = CompleteCollatzTable::build(3, Budget::default(), true).unwrap();
        let seeds: Vec<u64> = t.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, [8, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(t.rows[0].iterates, [4u64, 2, 1].map(Natural::from));
    }

    #[test]
    fn complete_rows_match_branches() {
        for order in 1..=10 {
            let t = CompleteCollatzTable::build(order, Budget::default(), false).unwrap();
            assert_eq!(t.rows.len(), 1 << order);
            assert!(t.inconsistent_rows().is_empty());
            let branches = table(order);
            for r in &t.rows {
                let e = &branches.entries()[(r.seed % (1 << order)) as usize];
                assert_eq!((r.f, &r.phi), (e.a_coeff, &e.b_coeff));
            }
        }
    }

    #[test]
    fn sequence_outputs() {
        let seq = kernel::sequence(&Natural::from(7u32), 3, 3).unwrap();
        let mut buf = Vec::new();
        write_sequence(&seq, Format::Text, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "7 26 10 4\n");
    }

    #[test]
    fn grid_subsamples() {
        let grid = sequence_grid(&Natural::from(7u32), 3, 3).unwrap();
        assert_eq!(grid.len(), 4);
        assert_eq!(
            grid[1][1..],
            ["11", "17", "26", "13", "20", "10", "5", "8", "4"]
        );
        assert_eq!(grid[2][1..], ["", "17", "", "13", "", "10", "", "8", ""]);
        assert_eq!(grid[3][1..], ["", "", "26", "", "", "10", "", "", "4"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn round_trip(order in 1u32..=10) {
            let t = table(order);
            let mut csv_buf = Vec::new();
            write_table_csv(&t, &mut csv_buf).unwrap();
            prop_assert_eq!(read_table_csv(csv_buf.as_slice()).unwrap(), t.clone());
            let mut json_buf = Vec::new();
            write_table_json(&t, &mut json_buf).unwrap();
            prop_assert_eq!(read_table_json(json_buf.as_slice()).unwrap(), t);
        }
    }
}
