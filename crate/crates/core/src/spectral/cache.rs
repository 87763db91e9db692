//! Flat binary feature cache.
//!
//! Layout: magic "HSFT", version u32 LE, then for each (segment, channel, w)
//! in iteration order: dims u32[2] (rows = window positions, cols = feature
//! length) followed by f64 LE row-major values.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HSFT";
pub const VERSION: u32 = 1;

/// One cached feature matrix: rows are window positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: u32,
    pub cols: u32,
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidData("ragged feature rows".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            values.extend_from_slice(r);
        }
        Ok(FeatureMatrix { rows: rows.len() as u32, cols: cols as u32, values })
    }
}

pub fn write_cache<W: Write>(mut out: W, matrices: &[FeatureMatrix]) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    for m in matrices {
        if m.values.len() != (m.rows as usize) * (m.cols as usize) {
            return Err(Error::InvalidData("matrix dims do not match value count".into()));
        }
        out.write_all(&m.rows.to_le_bytes())?;
        out.write_all(&m.cols.to_le_bytes())?;
        for v in &m.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_cache<R: Read>(mut input: R) -> Result<Vec<FeatureMatrix>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidData("bad feature cache magic".into()));
    }
    let mut v4 = [0u8; 4];
    input.read_exact(&mut v4)?;
    let version = u32::from_le_bytes(v4);
    if version != VERSION {
        return Err(Error::InvalidData(format!("unsupported cache version {version}")));
    }
    let mut out = Vec::new();
    loop {
        let mut dims = [0u8; 8];
        match input.read_exact(&mut dims) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let rows = u32::from_le_bytes(dims[0..4].try_into().unwrap());
        let cols = u32::from_le_bytes(dims[4..8].try_into().unwrap());
        let count = rows as usize * cols as usize;
        let mut values = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            input.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        out.push(FeatureMatrix { rows, cols, values });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let m1 = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let m2 = FeatureMatrix::from_rows(&[vec![-0.5; 9]]).unwrap();
        let mut buf = Vec::new();
        write_cache(&mut buf, &[m1.clone(), m2.clone()]).unwrap();
        assert_eq!(&buf[..4], MAGIC);
        let back = read_cache(buf.as_slice()).unwrap();
        assert_eq!(back, vec![m1, m2]);
    }

    #[test]
    fn rejects_bad_magic() {
        let buf = b"XXXX\x01\x00\x00\x00".to_vec();
        assert!(read_cache(buf.as_slice()).is_err());
    }
}
