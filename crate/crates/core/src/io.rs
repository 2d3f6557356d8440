//! Binary container for spectral fields.
//!
//! Layout (little-endian):
//!
//! | bytes | content                                    |
//! |-------|--------------------------------------------|
//! | 4     | magic `PMNS`                               |
//! | 4     | format version (`u32`, currently 1)        |
//! | 4     | `n_per_axis` (`u32`)                       |
//! | 8     | `delta_xi` (`f64`)                         |
//! | ...   | three arrays of `n^3` complex values       |
//!
//! Each array is row-major over `(k_1, k_2, k_3)` with every axis running
//! `-n/2 .. n/2 - 1`, and each value is written as `re` then `im` (`f64`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{PmnsError, Result};
use crate::grid::{FrequencyGrid, SpectralVectorField};

pub const MAGIC: &[u8; 4] = b"PMNS";
pub const VERSION: u32 = 1;

fn centered_to_storage(grid: &FrequencyGrid, pos: usize) -> usize {
    let n = grid.n();
    let h = (n / 2) as i64;
    let a = [pos / (n * n), (pos / n) % n, pos % n];
    let k = [a[0] as i64 - h, a[1] as i64 - h, a[2] as i64 - h];
    grid.index_of(k).expect("centered position is on the lattice")
}

pub fn write_field<W: Write>(mut w: W, f: &SpectralVectorField) -> Result<()> {
    let grid = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&grid.delta_xi().to_le_bytes())?;
    for j in 0..3 {
        let c = f.component(j);
        for pos in 0..grid.len() {
            let z = c[centered_to_storage(grid, pos)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn encode_field(f: &SpectralVectorField) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 48 * f.grid().len());
    write_field(&mut out, f).expect("writing to a Vec cannot fail");
    out
}

pub fn read_field<R: Read>(mut r: R) -> Result<SpectralVectorField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(PmnsError::Format(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(PmnsError::Format(format!("unsupported version {version}")));
    }
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let delta_xi = f64::from_le_bytes(b8);
    let grid = FrequencyGrid::new(n, delta_xi).map_err(|e| PmnsError::Format(e.to_string()))?;
    let mut f = SpectralVectorField::zeros(grid);
    for j in 0..3 {
        for pos in 0..grid.len() {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            f.component_mut(j)[centered_to_storage(&grid, pos)] = Complex64::new(re, im);
        }
    }
    Ok(f)
}

pub fn save_field(path: impl AsRef<Path>, f: &SpectralVectorField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<SpectralVectorField> {
    read_field(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = FrequencyGrid::new(2, 0.25).unwrap();
        let mut f = SpectralVectorField::zeros(g);
        // k = (-1,-1,-1) is storage index (1,1,1) and centered position 0
        f.component_mut(0)[g.join([1, 1, 1])] = Complex64::new(1.5, -2.0);
        let bytes = encode_field(&f);
        assert_eq!(&bytes[..4], b"PMNS");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 0.25);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), -2.0);
        assert_eq!(bytes.len(), 20 + 3 * 8 * 16);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = encode_field(&SpectralVectorField::zeros(FrequencyGrid::new(2, 1.0).unwrap()));
        bytes[0] = b'X';
        assert!(matches!(read_field(&bytes[..]), Err(PmnsError::Format(_))));
    }

    proptest! {
        #[test]
        fn container_round_trip(seed in proptest::collection::vec(-1e3f64..1e3, 6), dxi in 0.01f64..4.0) {
            let g = FrequencyGrid::new(4, dxi).unwrap();
            let f = SpectralVectorField::from_fn(g, |idx| {
                let t = idx as f64;
                [
                    Complex64::new(seed[0] * t.sin(), seed[1]),
                    Complex64::new(seed[2], seed[3] * t.cos()),
                    Complex64::new(seed[4] + t, seed[5]),
                ]
            });
            let back = read_field(&encode_field(&f)[..]).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
