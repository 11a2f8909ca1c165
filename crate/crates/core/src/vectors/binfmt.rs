//! FBVX: row-major f32 matrices with a companion id file.
//!
//! Layout (little endian): `b"FBVX"`, version `u32`, dim `u32`, reserved `u32`
//! (zero), then `rows × dim` IEEE-754 single-precision values. The row count
//! is implied by the file size. Ids live in `<path>.ids`, one per row.

use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{create, open};
use crate::lexical::read_u32;

const MAGIC: &[u8; 4] = b"FBVX";
const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 16;

/// Row-major matrix with one id per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub dim: usize,
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

impl Matrix {
    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

pub fn ids_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

pub fn write_matrix_to<W: Write>(mut w: W, dim: usize, values: &[f64]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for v in values {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()
}

/// Reads the value block; returns `(dim, values)`.
pub fn read_matrix_from<R: Read>(mut r: R, origin: &str) -> Result<(usize, Vec<f64>)> {
    let bad = |msg: String| Error::parse(origin, 0, msg);
    let io = |e: std::io::Error| Error::parse(origin, 0, e.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("not an FBVX matrix (bad magic)".into()));
    }
    let version = read_u32(&mut r).map_err(io)?;
    if version != VERSION {
        return Err(bad(format!("unsupported FBVX version {version}")));
    }
    let dim = read_u32(&mut r).map_err(io)? as usize;
    let _reserved = read_u32(&mut r).map_err(io)?;
    if dim == 0 {
        return Err(bad("FBVX dimension is zero".into()));
    }
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(io)?;
    if body.len() % (4 * dim) != 0 {
        return Err(bad(format!(
            "payload of {} bytes is not a whole number of {dim}-dim rows",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((dim, values))
}

pub fn write_matrix(path: impl AsRef<Path>, matrix: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let out = create(path)?;
    write_matrix_to(out, matrix.dim, &matrix.values).map_err(|e| Error::io(path, e))?;
    let ids = ids_path(path);
    let mut out = create(&ids)?;
    for id in &matrix.ids {
        writeln!(out, "{id}").map_err(|e| Error::io(&ids, e))?;
    }
    out.flush().map_err(|e| Error::io(&ids, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let (dim, values) = read_matrix_from(open(path)?, &path.display().to_string())?;
    let ids_file = ids_path(path);
    let ids = open(&ids_file)?
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(&ids_file, e))?;
    if ids.len() * dim != values.len() {
        return Err(Error::Validation(format!(
            "{}: {} ids for {} rows",
            ids_file.display(),
            ids.len(),
            values.len() / dim
        )));
    }
    Ok(Matrix { dim, ids, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_sixteen_bytes() {
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, 3, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(buf.len(), HEADER_BYTES + 12);
        assert_eq!(&buf[..4], b"FBVX");
        let (dim, values) = read_matrix_from(buf.as_slice(), "mem").unwrap();
        assert_eq!(dim, 3);
        assert_eq!(values, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn ragged_payload_rejected() {
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, 3, &[1.0, 2.0, 3.0]).unwrap();
        buf.extend_from_slice(&[0, 0, 0, 0]);
        assert!(read_matrix_from(buf.as_slice(), "mem").is_err());
    }

    #[test]
    fn file_round_trip_at_single_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fbvx");
        let m = Matrix {
            dim: 2,
            ids: vec!["a".into(), "b".into()],
            values: vec![0.1, 0.2, -0.3, 1e-3],
        };
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.ids, m.ids);
        for (x, y) in back.values.iter().zip(&m.values) {
            assert_eq!(*x, *y as f32 as f64);
        }
    }
}
