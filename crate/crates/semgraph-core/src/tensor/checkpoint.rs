//! Named-array checkpoint files.
//!
//! Text format, line oriented:
//!
//! ```text
//! SEMGRAPH-PARAMS v1
//! param <name> <rows> <cols>
//! <row of cols values>      (rows lines, shortest round-trip f64 text)
//! ```
//!
//! The shortest round-trip float formatting makes save/load lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const HEADER: &str = "SEMGRAPH-PARAMS v1";

pub fn save_named(path: impl AsRef<Path>, entries: &[(String, &Matrix)]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    writeln!(out, "{HEADER}").expect("string write");
    for (name, m) in entries {
        assert!(
            !name.is_empty() && !name.contains(char::is_whitespace),
            "checkpoint names must be non-empty and whitespace-free"
        );
        writeln!(out, "param {name} {} {}", m.rows(), m.cols()).expect("string write");
        for i in 0..m.rows() {
            let row = m
                .row(i)
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(out, "{row}").expect("string write");
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_named(path: impl AsRef<Path>) -> Result<Vec<(String, Matrix)>> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(name.clone(), e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&name, 1, "empty checkpoint"))?;
    if header.trim() != HEADER {
        return Err(Error::parse(&name, 1, format!("bad header {header:?}")));
    }

    let mut entries = Vec::new();
    while let Some((lineno, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "param" {
            return Err(Error::parse(
                &name,
                lineno + 1,
                "expected `param <name> <rows> <cols>`",
            ));
        }
        let pname = fields[1].to_string();
        let rows: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(&name, lineno + 1, "invalid row count"))?;
        let cols: usize = fields[3]
            .parse()
            .map_err(|_| Error::parse(&name, lineno + 1, "invalid column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (rno, row) = lines.next().ok_or_else(|| {
                Error::parse(&name, lineno + 1, format!("truncated array {pname}"))
            })?;
            let values: Vec<&str> = row.split_whitespace().collect();
            if values.len() != cols {
                return Err(Error::parse(
                    &name,
                    rno + 1,
                    format!("expected {cols} values, found {}", values.len()),
                ));
            }
            for v in values {
                data.push(
                    v.parse::<f64>().map_err(|_| {
                        Error::parse(&name, rno + 1, format!("invalid value {v:?}"))
                    })?,
                );
            }
        }
        entries.push((pname, Matrix::from_vec(rows, cols, data)));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn round_trip_is_lossless() {
        let mut rng = Rng::new(13);
        let a = Matrix::from_vec(3, 4, (0..12).map(|_| rng.normal() * 1e3).collect());
        let b = Matrix::from_vec(1, 2, vec![f64::MIN_POSITIVE, -0.1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        save_named(&path, &[("w.0".into(), &a), ("bias".into(), &b)]).unwrap();
        let back = load_named(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].0, "w.0");
        assert_eq!(back[0].1, a);
        assert_eq!(back[1].1, b);
    }

    #[test]
    fn truncated_file_errors_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        std::fs::write(&path, "SEMGRAPH-PARAMS v1\nparam w 2 2\n1 2\n").unwrap();
        let err = load_named(&path).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        std::fs::write(&path, "NOT-A-CHECKPOINT\n").unwrap();
        assert!(load_named(&path).is_err());
    }
}
