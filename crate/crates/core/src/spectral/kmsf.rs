//! KMSF v1: a little binary container for grid fields.
//!
//! Layout (little-endian): magic `KMSF`, u32 version = 1, u32 n, u32 N,
//! u32 dimV, f64 period, then `N^n * dimV` f64 values with axes row-major
//! and the component index fastest-varying.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

pub const MAGIC: &[u8; 4] = b"KMSF";
pub const VERSION: u32 = 1;

pub fn write_kmsf<W: Write>(mut w: W, f: &Field) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(f.grid().n() as u32).to_le_bytes())?;
    w.write_all(&(f.grid().points() as u32).to_le_bytes())?;
    w.write_all(&(f.dim_v() as u32).to_le_bytes())?;
    w.write_all(&f.grid().period().to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_kmsf<R: Read>(mut r: R) -> Result<Field> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a KMSF file".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported KMSF version {version}")));
    }
    r.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let points = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let dim_v = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let period = f64::from_le_bytes(f64buf);

    let grid = Grid::new(n, points, period)
        .map_err(|e| Error::Format(format!("invalid grid header: {e}")))?;
    let len = grid
        .lattice_len()
        .checked_mul(dim_v)
        .ok_or_else(|| Error::Format("field size overflows".into()))?;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut f64buf)?;
        values.push(f64::from_le_bytes(f64buf));
    }
    Field::from_values(grid, dim_v, values)
        .map_err(|e| Error::Format(format!("invalid field payload: {e}")))
}

pub fn save_kmsf(path: impl AsRef<Path>, f: &Field) -> Result<()> {
    let file = File::create(path)?;
    write_kmsf(BufWriter::new(file), f)
}

pub fn load_kmsf(path: impl AsRef<Path>) -> Result<Field> {
    let file = File::open(path)?;
    read_kmsf(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let grid = Grid::standard(2, 8).unwrap();
        let f = Field::from_fn(grid, 3, |x, c| (x[0] * (c + 1) as f64).sin() + x[1]);
        let mut buf = Vec::new();
        write_kmsf(&mut buf, &f).unwrap();
        let g = read_kmsf(buf.as_slice()).unwrap();
        assert_eq!(f.values(), g.values());
        assert_eq!(f.grid(), g.grid());
        assert_eq!(f.dim_v(), g.dim_v());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = read_kmsf(&b"NOPE aaaaaaaaaaaaaaaaaaaa"[..]);
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let grid = Grid::standard(2, 8).unwrap();
        let f = Field::zeros(grid, 1);
        let mut buf = Vec::new();
        write_kmsf(&mut buf, &f).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_kmsf(buf.as_slice()).is_err());
    }
}
