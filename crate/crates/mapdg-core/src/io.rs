//! Binary feature container and small file helpers.
//!
//! Container layout: 8-byte magic (`MDGFEAT1` for f32 payloads, `MDGFEAT8`
//! for f64), `u64` row count, `u64` column count, then row-major
//! little-endian values. Features are written as f32; propagation-stack
//! steps use the f64 variant to preserve full precision.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC_F32: [u8; 8] = *b"MDGFEAT1";
pub const MAGIC_F64: [u8; 8] = *b"MDGFEAT8";

fn ingest_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Ingest { path: path.display().to_string(), line, msg: msg.into() }
}

/// Writes a matrix as the f32 container (the on-disk feature format).
pub fn write_mat_f32<T: Scalar>(path: &Path, mat: &Mat<T>) -> Result<()> {
    write_mat(path, mat, false)
}

/// Writes a matrix as the f64 container (full-precision artifacts).
pub fn write_mat_f64<T: Scalar>(path: &Path, mat: &Mat<T>) -> Result<()> {
    write_mat(path, mat, true)
}

fn write_mat<T: Scalar>(path: &Path, mat: &Mat<T>, wide: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(if wide { &MAGIC_F64 } else { &MAGIC_F32 })?;
    w.write_all(&(mat.rows() as u64).to_le_bytes())?;
    w.write_all(&(mat.cols() as u64).to_le_bytes())?;
    for &v in mat.data() {
        if wide {
            w.write_all(&v.f64().to_le_bytes())?;
        } else {
            w.write_all(&(v.f64() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads either container variant into the requested scalar type.
pub fn read_mat<T: Scalar>(path: &Path) -> Result<Mat<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| ingest_err(path, 0, "file too short for container header"))?;
    let wide = match magic {
        MAGIC_F32 => false,
        MAGIC_F64 => true,
        _ => return Err(ingest_err(path, 0, "unrecognized container magic")),
    };
    let rows = read_u64(&mut r, path)? as usize;
    let cols = read_u64(&mut r, path)? as usize;
    let count = rows.checked_mul(cols).ok_or_else(|| ingest_err(path, 0, "size overflow"))?;
    let mut data = Vec::with_capacity(count);
    if wide {
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf).map_err(|_| ingest_err(path, 0, "truncated payload"))?;
            data.push(T::c(f64::from_le_bytes(buf)));
        }
    } else {
        let mut buf = [0u8; 4];
        for _ in 0..count {
            r.read_exact(&mut buf).map_err(|_| ingest_err(path, 0, "truncated payload"))?;
            data.push(T::c(f32::from_le_bytes(buf) as f64));
        }
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(ingest_err(path, 0, "trailing bytes after payload"));
    }
    Mat::from_vec(rows, cols, data)
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|_| ingest_err(path, 0, "truncated header"))?;
    Ok(u64::from_le_bytes(buf))
}

/// Reads the CSV feature fallback: a `rows,cols` header line followed by
/// comma-separated rows.
pub fn read_mat_csv<T: Scalar>(path: &Path) -> Result<Mat<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| ingest_err(path, 1, "empty feature file"))?;
    let dims: Vec<&str> = header.split(',').map(str::trim).collect();
    if dims.len() != 2 {
        return Err(ingest_err(path, 1, "header must be 'rows,cols'"));
    }
    let rows: usize = dims[0]
        .parse()
        .map_err(|_| ingest_err(path, 1, format!("bad row count '{}'", dims[0])))?;
    let cols: usize = dims[1]
        .parse()
        .map_err(|_| ingest_err(path, 1, format!("bad column count '{}'", dims[1])))?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        seen += 1;
        if seen > rows {
            return Err(ingest_err(path, idx + 1, "more rows than the header declares"));
        }
        let mut row_len = 0usize;
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| ingest_err(path, idx + 1, format!("bad value '{tok}'")))?;
            data.push(T::c(v));
            row_len += 1;
        }
        if row_len != cols {
            return Err(ingest_err(
                path,
                idx + 1,
                format!("expected {cols} values, found {row_len}"),
            ));
        }
    }
    if seen != rows {
        return Err(ingest_err(path, 0, format!("expected {rows} rows, found {seen}")));
    }
    Mat::from_vec(rows, cols, data)
}

/// Appends one JSON value per line.
pub fn write_jsonl<S: serde::Serialize>(path: &Path, records: &[S]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
