//! Matrix file formats: a small CSV dialect and the "SPB1" binary format.
//!
//! CSV layout:
//! ```text
//! n,k
//! 3,2
//! 1,0
//! 0,1
//! 0,0
//! ```
//! The first line is the literal header `n,k`, the second line carries the
//! dimensions, and the remaining `n` lines carry `k` comma-separated values
//! each (row-major). Floats are written in shortest round-trip form.
//!
//! Binary layout (little-endian): magic bytes `SPB1`, one dtype byte
//! (0 = real f64, 1 = complex interleaved re/im f64), u64 row count, u64
//! column count, then the row-major payload.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::{Error, Result};

pub const SPB1_MAGIC: &[u8; 4] = b"SPB1";

/// Upper bound on accepted element counts; guards parsers handed untrusted
/// input against absurd allocations.
const MAX_ELEMENTS: u64 = 100_000_000;

#[derive(Debug, Clone)]
pub enum MatrixData {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub fn format_matrix_csv(m: &Array2<f64>) -> String {
    let (n, k) = m.dim();
    let mut out = String::from("n,k\n");
    out.push_str(&format!("{n},{k}\n"));
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV input".into()))?;
    if header.trim() != "n,k" {
        return Err(Error::Parse(format!(
            "expected header \"n,k\", got {header:?}"
        )));
    }
    let dims = lines
        .next()
        .ok_or_else(|| Error::Parse("missing dimension line".into()))?;
    let (n, k) = parse_dims(dims)?;
    let mut data = Vec::with_capacity((n * k) as usize);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {n} data rows, got {i}")))?;
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad float {field:?} in row {i}")))?;
            data.push(v);
            count += 1;
        }
        if count != k as usize {
            return Err(Error::Parse(format!(
                "row {i} has {count} fields, expected {k}"
            )));
        }
    }
    if let Some(extra) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(Error::Parse("trailing data after matrix rows".into()));
        }
    }
    Array2::from_shape_vec((n as usize, k as usize), data)
        .map_err(|e| Error::Parse(format!("shape error: {e}")))
}

fn parse_dims(line: &str) -> Result<(u64, u64)> {
    let mut it = line.split(',');
    let n: u64 = it
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad dimension line {line:?}")))?;
    let k: u64 = it
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad dimension line {line:?}")))?;
    if it.next().is_some() {
        return Err(Error::Parse(format!("bad dimension line {line:?}")));
    }
    if n == 0 || k == 0 || n.saturating_mul(k) > MAX_ELEMENTS {
        return Err(Error::Parse(format!("unsupported dimensions {n}x{k}")));
    }
    Ok((n, k))
}

pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    write_atomic(path, format_matrix_csv(m).as_bytes())
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    parse_matrix_csv(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// SPB1 binary
// ---------------------------------------------------------------------------

pub fn format_matrix_spb1(m: &Array2<f64>) -> Vec<u8> {
    let (n, k) = m.dim();
    let mut out = Vec::with_capacity(21 + 8 * n * k);
    out.extend_from_slice(SPB1_MAGIC);
    out.push(0u8);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(k as u64).to_le_bytes());
    for x in m.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn format_matrix_spb1_complex(m: &Array2<Complex64>) -> Vec<u8> {
    let (n, k) = m.dim();
    let mut out = Vec::with_capacity(21 + 16 * n * k);
    out.extend_from_slice(SPB1_MAGIC);
    out.push(1u8);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(k as u64).to_le_bytes());
    for x in m.iter() {
        out.extend_from_slice(&x.re.to_le_bytes());
        out.extend_from_slice(&x.im.to_le_bytes());
    }
    out
}

pub fn parse_matrix_spb1(bytes: &[u8]) -> Result<MatrixData> {
    if bytes.len() < 21 {
        return Err(Error::Parse("SPB1 input truncated".into()));
    }
    if &bytes[..4] != SPB1_MAGIC {
        return Err(Error::Parse("bad SPB1 magic".into()));
    }
    let dtype = bytes[4];
    let n = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
    let k = u64::from_le_bytes(bytes[13..21].try_into().unwrap());
    if n == 0 || k == 0 || n.saturating_mul(k) > MAX_ELEMENTS {
        return Err(Error::Parse(format!("unsupported dimensions {n}x{k}")));
    }
    let count = (n * k) as usize;
    let payload = &bytes[21..];
    match dtype {
        0 => {
            if payload.len() != 8 * count {
                return Err(Error::Parse(format!(
                    "payload has {} bytes, expected {}",
                    payload.len(),
                    8 * count
                )));
            }
            let data: Vec<f64> = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(MatrixData::Real(
                Array2::from_shape_vec((n as usize, k as usize), data)
                    .map_err(|e| Error::Parse(format!("shape error: {e}")))?,
            ))
        }
        1 => {
            if payload.len() != 16 * count {
                return Err(Error::Parse(format!(
                    "payload has {} bytes, expected {}",
                    payload.len(),
                    16 * count
                )));
            }
            let data: Vec<Complex64> = payload
                .chunks_exact(16)
                .map(|c| {
                    Complex64::new(
                        f64::from_le_bytes(c[..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..].try_into().unwrap()),
                    )
                })
                .collect();
            Ok(MatrixData::Complex(
                Array2::from_shape_vec((n as usize, k as usize), data)
                    .map_err(|e| Error::Parse(format!("shape error: {e}")))?,
            ))
        }
        other => Err(Error::Parse(format!("unknown SPB1 dtype {other}"))),
    }
}

/// Reads a real matrix from SPB1, rejecting complex payloads.
pub fn parse_matrix_spb1_real(bytes: &[u8]) -> Result<Array2<f64>> {
    match parse_matrix_spb1(bytes)? {
        MatrixData::Real(m) => Ok(m),
        MatrixData::Complex(_) => Err(Error::Parse(
            "complex SPB1 matrix rejected by real-only reader".into(),
        )),
    }
}

pub fn write_matrix_spb1(path: &Path, m: &Array2<f64>) -> Result<()> {
    write_atomic(path, &format_matrix_spb1(m))
}

pub fn read_matrix_spb1_real(path: &Path) -> Result<Array2<f64>> {
    parse_matrix_spb1_real(&fs::read(path)?)
}

/// Reads a real matrix from either format, keyed on the SPB1 magic.
pub fn read_matrix_auto(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == SPB1_MAGIC {
        parse_matrix_spb1_real(&bytes)
    } else {
        parse_matrix_csv(std::str::from_utf8(&bytes).map_err(|_| {
            Error::Parse("matrix file is neither SPB1 nor UTF-8 CSV".into())
        })?)
    }
}

/// Writes via a temp file in the same directory plus rename, so failures
/// never leave a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("bad output path {path:?}")))?;
    let mut tmp = dir.to_path_buf();
    tmp.push(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_round_trip() {
        let m = array![[1.0, -2.5e-17], [3.0, f64::MIN_POSITIVE]];
        let parsed = parse_matrix_csv(&format_matrix_csv(&m)).unwrap();
        assert_eq!(m, parsed);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(parse_matrix_csv("rows,cols\n1,1\n0\n").is_err());
        assert!(parse_matrix_csv("n,k\n2,2\n1,2\n3\n").is_err());
        assert!(parse_matrix_csv("n,k\n0,4\n").is_err());
    }

    #[test]
    fn spb1_round_trip() {
        let m = array![[1.0, 2.0, 3.0], [-4.0, 5.5, 0.0]];
        match parse_matrix_spb1(&format_matrix_spb1(&m)).unwrap() {
            MatrixData::Real(p) => assert_eq!(m, p),
            _ => panic!("expected real"),
        }
    }

    #[test]
    fn spb1_real_reader_rejects_complex() {
        let m = array![[Complex64::new(1.0, 2.0)]];
        let bytes = format_matrix_spb1_complex(&m);
        assert!(parse_matrix_spb1_real(&bytes).is_err());
        assert!(matches!(
            parse_matrix_spb1(&bytes).unwrap(),
            MatrixData::Complex(_)
        ));
    }

    #[test]
    fn spb1_rejects_garbage() {
        assert!(parse_matrix_spb1(b"SPB2aaaaaaaaaaaaaaaaaaaaa").is_err());
        assert!(parse_matrix_spb1(b"SPB1").is_err());
        let mut bytes = format_matrix_spb1(&array![[1.0]]);
        bytes.truncate(bytes.len() - 1);
        assert!(parse_matrix_spb1(&bytes).is_err());
    }
}
