//! Binary field records.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content              |
//! |--------|------|----------------------|
//! | 0      | 8    | magic `PXFLD1\0\0`   |
//! | 8      | 4    | d (u32)              |
//! | 12     | 4    | N (u32)              |
//! | 16     | 8    | L (f64)              |
//! | 24     | 4    | z (f32)              |
//! | 28     | 4    | tau (f32)            |
//! | 32     | 16 N^d | interleaved (re, im) f64, row-major |
//!
//! z and tau are stored at single precision; they are labels, not data.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Field, LateralGrid};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"PXFLD1\0\0";
pub const HEADER_LEN: usize = 32;

pub fn write_field<W: Write>(mut w: W, f: &Field) -> Result<()> {
    let g = f.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..8].copy_from_slice(&MAGIC);
    header[8..12].copy_from_slice(&(g.dim() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(g.n() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&g.length().to_le_bytes());
    header[24..28].copy_from_slice(&(f.z as f32).to_le_bytes());
    header[28..32].copy_from_slice(&(f.tau as f32).to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(16 * f.values().len());
    for v in f.values() {
        body.extend_from_slice(&v.re.to_le_bytes());
        body.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

/// Reads a record, building a fresh grid from its header.
pub fn read_field<R: Read>(mut r: R) -> Result<Field> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if header[0..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let word = |a: usize| u32::from_le_bytes(header[a..a + 4].try_into().unwrap());
    let dim = word(8) as usize;
    let n = word(12) as usize;
    let length = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let z = f32::from_le_bytes(header[24..28].try_into().unwrap()) as f64;
    let tau = f32::from_le_bytes(header[28..32].try_into().unwrap()) as f64;
    let grid = LateralGrid::new(dim, n, length).map_err(|e| Error::Format(e.to_string()))?;
    read_body(r, grid, z, tau)
}

/// Reads a record that must live on `grid`; the returned field shares it.
pub fn read_field_on<R: Read>(r: R, grid: &Arc<LateralGrid>) -> Result<Field> {
    let f = read_field(r)?;
    f.check_on(grid)?;
    let (z, tau) = (f.z, f.tau);
    Ok(Field::new(grid.clone(), f.into_values())?.with_meta(z, tau))
}

fn read_body<R: Read>(mut r: R, grid: Arc<LateralGrid>, z: f64, tau: f64) -> Result<Field> {
    let mut body = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut body)
        .map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok(Field::new(grid, values)?.with_meta(z, tau))
}

pub fn save_field(path: impl AsRef<Path>, f: &Field) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_field(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    let file = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_values_exactly() {
        let g = LateralGrid::new(2, 8, 2.5).unwrap();
        let f =
            Field::from_fn(&g, |x| Complex64::new(x[0].sin(), x[1] * 1e-300)).with_meta(0.25, -3.0);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 16 * 64);
        let back = read_field(&buf[..]).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!((back.z, back.tau), (0.25, -3.0));
        assert!(back.grid().same_shape(&g));
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let g = LateralGrid::new(1, 8, 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::zeros(&g)).unwrap();
        assert!(matches!(read_field(&buf[..40]), Err(Error::Format(_))));
        buf[0] = b'Q';
        assert!(matches!(read_field(&buf[..]), Err(Error::Format(_))));
    }

    #[test]
    fn read_on_foreign_grid_fails() {
        let g = LateralGrid::new(1, 8, 1.0).unwrap();
        let h = LateralGrid::new(1, 16, 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::zeros(&g)).unwrap();
        assert!(read_field_on(&buf[..], &h).is_err());
        assert!(read_field_on(&buf[..], &g).is_ok());
    }
}
