//! Resumable sweep records.
//!
//! One line per finished chunk:
//! `n chunk_start chunk_end z_partial s_num_partial r_num_partial p_partial aplus_partial`,
//! and a closing `DONE n` once every chunk of order `n` is in. Records of
//! several orders may share one file.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, BigUint};

use crate::error::{Error, Result};
use crate::global::ChunkPartial;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckpointState {
    pub records: Vec<ChunkPartial>,
    pub done: bool,
}

fn bad(path: &Path, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    }
}

pub fn format_record(order: u32, c: &ChunkPartial) -> String {
    format!(
        "{order} {} {} {} {} {} {} {}",
        c.start, c.end, c.z, c.s_num, c.r_num, c.p, c.a_plus
    )
}

/// Records for `order` in `path`; a missing file is an empty checkpoint.
pub fn read(path: &Path, order: u32) -> Result<CheckpointState> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(CheckpointState::default()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut state = CheckpointState::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => continue,
            ["DONE", n] => {
                let n: u32 = n.parse().map_err(|_| bad(path, lineno, "bad order"))?;
                if n == order {
                    state.done = true;
                }
            }
            [n, start, end, z, s, r, p, a_plus] => {
                let n: u32 = n.parse().map_err(|_| bad(path, lineno, "bad order"))?;
                if n != order {
                    continue;
                }
                if state.done {
                    return Err(bad(path, lineno, format!("record after DONE {order}")));
                }
                let parse_u64 = |s: &str| {
                    s.parse::<u64>()
                        .map_err(|_| bad(path, lineno, format!("bad integer {s:?}")))
                };
                state.records.push(ChunkPartial {
                    start: parse_u64(start)?,
                    end: parse_u64(end)?,
                    z: parse_u64(z)?,
                    s_num: s
                        .parse::<BigUint>()
                        .map_err(|_| bad(path, lineno, format!("bad integer {s:?}")))?,
                    r_num: r
                        .parse::<BigInt>()
                        .map_err(|_| bad(path, lineno, format!("bad integer {r:?}")))?,
                    p: parse_u64(p)?,
                    a_plus: parse_u64(a_plus)?,
                });
            }
            _ => return Err(bad(path, lineno, "expected 8 fields or `DONE n`")),
        }
    }
    Ok(state)
}

/// Append-only handle; every line is flushed as soon as it is written.
pub struct CheckpointWriter {
    path: PathBuf,
    file: File,
}

impl CheckpointWriter {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(CheckpointWriter {
            path: path.to_path_buf(),
            file,
        })
    }

    fn write_line(&mut self, line: &str) -> Result<()> {
        writeln!(self.file, "{line}")
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn record(&mut self, order: u32, chunk: &ChunkPartial) -> Result<()> {
        self.write_line(&format_record(order, chunk))
    }

    pub fn done(&mut self, order: u32) -> Result<()> {
        self.write_line(&format!("DONE {order}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(start: u64) -> ChunkPartial {
        ChunkPartial {
            start,
            end: start + 4,
            z: 7,
            s_num: BigUint::from(123u32),
            r_num: BigInt::from(-5),
            p: 3,
            a_plus: 1,
        }
    }

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.ckpt");
        let mut w = CheckpointWriter::open(&path).unwrap();
        w.record(3, &chunk(0)).unwrap();
        w.record(4, &chunk(8)).unwrap();
        w.record(3, &chunk(4)).unwrap();
        w.done(3).unwrap();
        let s3 = read(&path, 3).unwrap();
        assert!(s3.done);
        assert_eq!(s3.records, vec![chunk(0), chunk(4)]);
        let s4 = read(&path, 4).unwrap();
        assert!(!s4.done);
        assert_eq!(s4.records, vec![chunk(8)]);
        assert_eq!(
            std::fs::read_to_string(&path)
                .unwrap()
                .lines()
                .next()
                .unwrap(),
            "3 0 4 7 123 -5 3 1"
        );
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            read(&dir.path().join("nope"), 3).unwrap(),
            CheckpointState::default()
        );
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, "3 0 4 7 x 0 1 1\n").unwrap();
        assert!(matches!(read(&path, 3), Err(Error::Checkpoint { .. })));
        std::fs::write(&path, "3 0 4\n").unwrap();
        assert!(matches!(read(&path, 3), Err(Error::Checkpoint { .. })));
        std::fs::write(&path, "DONE 3\n3 0 4 7 1 0 1 1\n").unwrap();
        assert!(matches!(read(&path, 3), Err(Error::Checkpoint { .. })));
    }
}
