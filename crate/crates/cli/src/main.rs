//! `collatz-branch`: build, export and verify order-n Collatz branch tables.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage or input error,
//! 3 table budget exceeded, 4 I/O or checkpoint failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use collatz_core::export::{self, CompleteCollatzTable, Format};
use collatz_core::global::DEFAULT_CHUNK_SIZE;
use collatz_core::{
    aggregate_with, corollary_stats, run_verification, sequence, BranchTable, Budget,
    DyadicRational, Error, Natural, SweepConfig, SweepOutcome, VerifyOptions, DEFAULT_MAX_ENTRIES,
};

#[derive(Parser, Debug)]
#[command(name = "collatz-branch", version, about)]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: OutputFormat,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Largest table (in entries) that may be materialized.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_ENTRIES)]
    max_entries: u64,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Resumable record of finished chunks for streaming sweeps.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,

    /// Residues per streaming chunk.
    #[arg(long, global = true, default_value_t = DEFAULT_CHUNK_SIZE)]
    chunk_size: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    Text,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
            OutputFormat::Text => Format::Text,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// The 2^n affine branches of the order-n map.
    Table { order: u32 },
    /// Check closed forms, recurrences and both table builders up to an order.
    Verify {
        #[arg(long)]
        max_order: u32,
    },
    /// Orbit of a seed under the order-k map.
    Sequence {
        seed: String,
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long)]
        length: usize,
        /// Lay the order-1..=k sequences out against the order-1 terms.
        #[arg(long)]
        grid: bool,
    },
    /// Seeds 1..=2^n with their first n iterates and branch coefficients.
    CompleteTable {
        order: u32,
        /// Put the seed 2^n in the first row.
        #[arg(long)]
        paper_order: bool,
    },
    /// Means, parity split and slope classification per order.
    Stats {
        order: u32,
        /// Last order of an inclusive range starting at ORDER.
        #[arg(long)]
        to: Option<u32>,
    },
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Output(PathBuf, io::Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Core(Error::BudgetExceeded { .. }) => 3,
            Failure::Core(
                Error::Io { .. } | Error::Checkpoint { .. } | Error::Csv(_) | Error::Json(_),
            )
            | Failure::Output(..) => 4,
            Failure::Core(_) => 2,
        }
    }
}

type Out = Box<dyn Write>;

fn open_output(path: &Option<PathBuf>) -> Result<Out, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Output(p.clone(), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let budget = Budget::new(cli.max_entries);
    let sweep = SweepConfig {
        chunk_size: cli.chunk_size,
        checkpoint: cli.checkpoint.clone(),
        chunk_limit: None,
    };
    let format = Format::from(cli.format);
    let out_path = cli
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("<stdout>"));
    let io_err = |e: io::Error| Failure::Output(out_path.clone(), e);

    match cli.command {
        Command::Table { order } => {
            let table = BranchTable::build_direct(order, budget)?;
            let mut out = open_output(&cli.output)?;
            match format {
                Format::Csv => export::write_table_csv(&table, &mut out)?,
                Format::Json => {
                    export::write_table_json(&table, &mut out)?;
                    writeln!(out).map_err(io_err)?;
                }
                Format::Text => export::write_table_text(&table, &mut out).map_err(io_err)?,
            }
            out.flush().map_err(io_err)?;
        }
        Command::Verify { max_order } => {
            let report = run_verification(max_order, &VerifyOptions { budget, sweep })?;
            let mut out = open_output(&cli.output)?;
            match format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut out, &report).map_err(Error::from)?;
                    writeln!(out).map_err(io_err)?;
                }
                Format::Csv => {
                    writeln!(out, "status,check,order,measured,expected").map_err(io_err)?;
                    for l in &report.lines {
                        writeln!(
                            out,
                            "{},{},{},\"{}\",\"{}\"",
                            if l.passed { "pass" } else { "fail" },
                            l.check,
                            l.order.map(|n| n.to_string()).unwrap_or_default(),
                            l.measured,
                            l.expected
                        )
                        .map_err(io_err)?;
                    }
                }
                Format::Text => {
                    for l in &report.lines {
                        writeln!(out, "{l}").map_err(io_err)?;
                    }
                    let failed = report.lines.iter().filter(|l| !l.passed).count();
                    writeln!(
                        out,
                        "{}: {} checks, {failed} failed, orders 1..={max_order}",
                        if report.passed { "PASS" } else { "FAIL" },
                        report.lines.len()
                    )
                    .map_err(io_err)?;
                }
            }
            out.flush().map_err(io_err)?;
            if !report.passed {
                return Err(Failure::Verification);
            }
        }
        Command::Sequence {
            seed,
            order,
            length,
            grid,
        } => {
            let seed: Natural = seed.parse()?;
            let mut out = open_output(&cli.output)?;
            if grid {
                let rows = export::sequence_grid(&seed, order, length)?;
                export::write_grid(&rows, format, &mut out)?;
            } else {
                let seq = sequence(&seed, order, length)?;
                export::write_sequence(&seq, format, &mut out)?;
            }
            out.flush().map_err(io_err)?;
        }
        Command::CompleteTable { order, paper_order } => {
            let table = CompleteCollatzTable::build(order, budget, paper_order)?;
            let mut out = open_output(&cli.output)?;
            match format {
                Format::Csv => table.write_csv(&mut out)?,
                Format::Json => {
                    table.write_json(&mut out)?;
                    writeln!(out).map_err(io_err)?;
                }
                Format::Text => table.write_text(&mut out).map_err(io_err)?,
            }
            out.flush().map_err(io_err)?;
        }
        Command::Stats { order, to } => {
            let last = to.unwrap_or(order);
            let mut out = open_output(&cli.output)?;
            let mut json_rows = Vec::new();
            if matches!(format, Format::Csv) {
                writeln!(
                    out,
                    "n,mean_a_num,mean_a_den,mean_b_num,mean_b_den,p,q,a_plus_count,a_plus_fraction_num,a_plus_fraction_den,K_e3,K_e2"
                )
                .map_err(io_err)?;
            }
            for n in order..=last {
                let g = match aggregate_with(n, &sweep)? {
                    SweepOutcome::Complete(g) => g,
                    SweepOutcome::Interrupted { .. } => unreachable!("no chunk limit set"),
                };
                let stats = corollary_stats(&g);
                let (p, q, plus) = (
                    g.p_count.unwrap_or_default(),
                    g.q_count.unwrap_or_default(),
                    g.a_plus_count.unwrap_or_default(),
                );
                let frac = stats
                    .a_plus_fraction
                    .clone()
                    .unwrap_or_else(|| DyadicRational::zero(0));
                let (ma, mb, fr) = (
                    stats.mean_a.reduced(),
                    stats.mean_b.reduced(),
                    frac.reduced(),
                );
                match format {
                    Format::Text => writeln!(
                        out,
                        "n={n} mean_a={} mean_b={} p={p} q={q} a_plus={plus} a_plus_fraction={} K=({},{}) log2(K)~{:.3} (approx)",
                        stats.mean_a, stats.mean_b, frac, g.k_coeff.e3, g.k_coeff.e2, g.k_coeff.log2_approx()
                    )
                    .map_err(io_err)?,
                    Format::Csv => writeln!(
                        out,
                        "{n},{},{},{},{},{p},{q},{plus},{},{},{},{}",
                        ma.numerator(), ma.denominator(), mb.numerator(), mb.denominator(),
                        fr.numerator(), fr.denominator(), g.k_coeff.e3, g.k_coeff.e2
                    )
                    .map_err(io_err)?,
                    Format::Json => json_rows.push(serde_json::json!({
                        "n": n,
                        "mean_a": stats.mean_a.to_string(),
                        "mean_b": stats.mean_b.to_string(),
                        "p": p,
                        "q": q,
                        "a_plus_count": plus,
                        "a_plus_fraction": frac.to_string(),
                        "K": { "e3": g.k_coeff.e3, "e2": g.k_coeff.e2 },
                        "log_k_sign": stats.log_k_sign,
                    })),
                }
            }
            if matches!(format, Format::Json) {
                serde_json::to_writer_pretty(&mut out, &json_rows).map_err(Error::from)?;
                writeln!(out).map_err(io_err)?;
            }
            out.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Output(p, e) => eprintln!("error: {}: {e}", p.display()),
                Failure::Verification => eprintln!("verification failed"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
