//! PFLD v1 field files.
//!
//! Header: magic `PFLD`, version `u32`, rank tag `u8`, `n` as `u32`, component count `u8`, time-sample
//! count `u32`, all little-endian. Samples follow as little-endian `f64`, ordered by time sample, then
//! component, then grid index with the first axis fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::field::{PeriodicField, Rank};
use super::grid::Grid;
use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 4] = b"PFLD";
pub const VERSION: u32 = 1;

pub fn write_fields<W: Write>(mut w: W, samples: &[PeriodicField]) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| LabError::Format("no samples to write".into()))?;
    for s in samples {
        first.check_compatible(s)?;
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[first.rank().tag()])?;
    w.write_all(&(first.grid().n() as u32).to_le_bytes())?;
    w.write_all(&[first.ncomp() as u8])?;
    w.write_all(&(samples.len() as u32).to_le_bytes())?;
    for s in samples {
        for v in s.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => {
            LabError::Format(format!("truncated while reading {what}"))
        }
        _ => LabError::Io(e),
    })
}

pub fn read_fields<R: Read>(mut r: R) -> Result<Vec<PeriodicField>> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(LabError::Format(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    let mut b1 = [0u8; 1];
    read_exact(&mut r, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(LabError::Format(format!("unsupported version {version}")));
    }
    read_exact(&mut r, &mut b1, "rank tag")?;
    let rank = Rank::from_tag(b1[0])
        .ok_or_else(|| LabError::Format(format!("unknown rank tag {}", b1[0])))?;
    read_exact(&mut r, &mut b4, "grid size")?;
    let grid = Grid::new(u32::from_le_bytes(b4) as usize)?;
    read_exact(&mut r, &mut b1, "component count")?;
    if b1[0] as usize != rank.components() {
        return Err(LabError::Format(format!(
            "component count {} does not match rank {}",
            b1[0],
            rank.name()
        )));
    }
    read_exact(&mut r, &mut b4, "time-sample count")?;
    let times = u32::from_le_bytes(b4) as usize;
    let per = grid.len() * rank.components();
    let mut out = Vec::with_capacity(times);
    let mut bytes = vec![0u8; per * 8];
    for _ in 0..times {
        read_exact(&mut r, &mut bytes, "samples")?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        out.push(PeriodicField::from_data(grid, rank, data)?);
    }
    Ok(out)
}

pub fn save(path: impl AsRef<Path>, samples: &[PeriodicField]) -> Result<()> {
    write_fields(BufWriter::new(File::create(path)?), samples)
}

pub fn load(path: impl AsRef<Path>) -> Result<Vec<PeriodicField>> {
    read_fields(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PeriodicField {
        let g = Grid::new(8).unwrap();
        PeriodicField::from_fn(g, Rank::Vector, |x, c| x[0] * 3.0 - x[2] + c as f64 * 0.1)
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_fields(&mut buf, &[sample()]).unwrap();
        assert_eq!(&buf[..4], b"PFLD");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(buf[8], 1);
        assert_eq!(u32::from_le_bytes(buf[9..13].try_into().unwrap()), 8);
        assert_eq!(buf[13], 3);
        assert_eq!(u32::from_le_bytes(buf[14..18].try_into().unwrap()), 1);
        assert_eq!(buf.len(), 18 + 8 * 3 * 512);
        // first sample is component 0 at the origin, second is the next point along the first axis
        let v1 = f64::from_le_bytes(buf[26..34].try_into().unwrap());
        assert_eq!(v1, 3.0 / 8.0);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let mut buf = Vec::new();
        write_fields(&mut buf, &[sample()]).unwrap();
        let err = read_fields(&buf[..100]).unwrap_err();
        assert!(matches!(err, LabError::Format(ref m) if m.contains("truncated")));
        buf[0] = b'X';
        assert!(matches!(read_fields(&buf[..]), Err(LabError::Format(_))));
    }

    #[test]
    fn bad_version() {
        let mut buf = Vec::new();
        write_fields(&mut buf, &[sample()]).unwrap();
        buf[4] = 2;
        assert!(read_fields(&buf[..]).is_err());
    }
}
