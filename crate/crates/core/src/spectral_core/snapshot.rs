//! Binary snapshot files.
//!
//! Layout (little-endian): `"BLAB"`, version `u16`, dim `u8`, components `u8`,
//! `n: u32`, four reserved zero bytes, time `f64`; then `(re, im)` pairs as
//! `f64`, component-major, wavevectors in row-major lattice order with each
//! axis running from `-n/2` to `n/2-1`.

use std::io::{Read, Write};

use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BLAB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u16,
    pub dim: u8,
    pub components: u8,
    pub n: u32,
    pub time: f64,
}

impl SnapshotHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6] = self.dim;
        b[7] = self.components;
        b[8..12].copy_from_slice(&self.n.to_le_bytes());
        b[16..24].copy_from_slice(&self.time.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<SnapshotHeader> {
        if b.len() < HEADER_LEN {
            return Err(Error::Format("snapshot header truncated".into()));
        }
        if &b[0..4] != MAGIC {
            return Err(Error::Format("bad snapshot magic".into()));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let dim = b[6];
        if dim != 3 {
            return Err(Error::Format(format!("unsupported dimension {dim}")));
        }
        let mut t = [0u8; 8];
        t.copy_from_slice(&b[16..24]);
        Ok(SnapshotHeader {
            version,
            dim,
            components: b[7],
            n: u32::from_le_bytes([b[8], b[9], b[10], b[11]]),
            time: f64::from_le_bytes(t),
        })
    }
}

/// Flat FFT-order indices listed in row-major lattice order.
fn lattice_order(grid: &Grid) -> Vec<usize> {
    let n = grid.n() as i64;
    let mut out = Vec::with_capacity(grid.len());
    for a in -n / 2..n / 2 {
        for b in -n / 2..n / 2 {
            for c in -n / 2..n / 2 {
                out.push(grid.index_of([a, b, c]).expect("lattice vector"));
            }
        }
    }
    out
}

pub fn encode(field: &SpectralField, time: f64) -> Vec<u8> {
    let grid = field.grid();
    let header = SnapshotHeader {
        version: VERSION,
        dim: 3,
        components: field.components() as u8,
        n: grid.n() as u32,
        time,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * field.coeffs().len());
    out.extend_from_slice(&header.to_bytes());
    let order = lattice_order(grid);
    for c in 0..field.components() {
        let part = field.component(c);
        for &idx in &order {
            out.extend_from_slice(&part[idx].re.to_le_bytes());
            out.extend_from_slice(&part[idx].im.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(SpectralField, f64)> {
    let header = SnapshotHeader::from_bytes(bytes)?;
    let grid = Grid::new(header.n as usize)?;
    let comps = header.components as usize;
    let expected = HEADER_LEN + 16 * comps * grid.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "snapshot has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let order = lattice_order(&grid);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); comps * grid.len()];
    let mut pos = HEADER_LEN;
    let mut next = || {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[pos..pos + 8]);
        pos += 8;
        f64::from_le_bytes(b)
    };
    for c in 0..comps {
        for &idx in &order {
            let re = next();
            let im = next();
            coeffs[c * grid.len() + idx] = Complex64::new(re, im);
        }
    }
    Ok((SpectralField::from_coeffs(&grid, comps, coeffs)?, header.time))
}

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField, time: f64) -> Result<()> {
    w.write_all(&encode(field, time))?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(SpectralField, f64)> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_24_bytes() {
        let h = SnapshotHeader {
            version: VERSION,
            dim: 3,
            components: 3,
            n: 16,
            time: 0.5,
        };
        let b = h.to_bytes();
        assert_eq!(&b[0..4], b"BLAB");
        assert_eq!(b[4..6], [1, 0]);
        assert_eq!(b[6], 3);
        assert_eq!(b[7], 3);
        assert_eq!(b[8..12], [16, 0, 0, 0]);
        assert_eq!(b[16..24], 0.5f64.to_le_bytes());
        assert_eq!(SnapshotHeader::from_bytes(&b).unwrap(), h);
    }

    #[test]
    fn first_coefficient_is_most_negative_wavevector() {
        let g = Grid::new(8).unwrap();
        let f = SpectralField::single_mode(&g, 1, 0, [-4, -4, -4], Complex64::new(2.0, 0.0)).unwrap();
        let bytes = encode(&f, 0.0);
        let re = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        assert_eq!(re, 4.0);
    }

    #[test]
    fn rejects_bad_magic_and_length() {
        let g = Grid::new(8).unwrap();
        let f = SpectralField::zeros(&g, 1);
        let mut bytes = encode(&f, 1.0);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(decode(&bytes).is_err());
    }
}
