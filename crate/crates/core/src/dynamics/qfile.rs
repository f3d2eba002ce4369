//! `QDYN1` binary format: 5-byte magic, three little-endian `u32`
//! (grid_n, components, transducers), then little-endian `f32` values in
//! `(y, x, component, transducer)` order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{DynamicsMatrix, MatrixKind, COMPONENTS};
use crate::action::N_TRANSDUCERS;
use crate::error::{Error, Result};

pub const QDYN_MAGIC: &[u8; 5] = b"QDYN1";
const HEADER_LEN: usize = 5 + 12;

pub fn write_qdyn(q: &DynamicsMatrix, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + q.values().len() * 4);
    buf.extend_from_slice(QDYN_MAGIC);
    for d in [q.grid_n(), COMPONENTS, N_TRANSDUCERS] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in q.values() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_qdyn(path: &Path) -> Result<DynamicsMatrix> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    let bad = |message: String| Error::Format { path: path.into(), message };
    if bytes.len() < HEADER_LEN || &bytes[..5] != QDYN_MAGIC {
        return Err(bad("not a QDYN1 file".into()));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[5 + 4 * i..9 + 4 * i].try_into().unwrap()) as usize;
    let (n, c, t) = (dim(0), dim(1), dim(2));
    if c != COMPONENTS || t != N_TRANSDUCERS || n < 2 {
        return Err(bad(format!("unsupported shape ({n}, {n}, {c}, {t})")));
    }
    let count = n.checked_mul(n).and_then(|x| x.checked_mul(c * t)).ok_or_else(|| bad("shape overflows".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * 4 {
        return Err(bad(format!("expected {} value bytes, found {}", count * 4, body.len())));
    }
    let values: Vec<f64> = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect();
    DynamicsMatrix::from_values(n, MatrixKind::Global, values).map_err(|e| bad(e.to_string()))
}

/// One row per cell and transducer: `x,y,k,dx_dt,dy_dt`.
pub fn export_csv(q: &DynamicsMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "x,y,k,dx_dt,dy_dt").map_err(io)?;
    let n = q.grid_n();
    for iy in 0..n {
        for ix in 0..n {
            for k in 1..=N_TRANSDUCERS as u8 {
                let v = q.get(ix, iy, k);
                writeln!(w, "{ix},{iy},{k},{},{}", v.dx, v.dy).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DisplacementVector;

    #[test]
    fn round_trip_through_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.bin");
        let mut q = DynamicsMatrix::filled(6, MatrixKind::Global, 0.0);
        q.set(5, 1, 4, DisplacementVector::new(1.25, -70.5));
        q.set(0, 3, 2, DisplacementVector::new(0.1, 3.0));
        write_qdyn(&q, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..5], b"QDYN1");
        assert_eq!(&bytes[5..9], &6u32.to_le_bytes());
        assert_eq!(bytes.len(), 17 + 6 * 6 * 8 * 4);
        let back = read_qdyn(&path).unwrap();
        assert_eq!(back.shape(), [6, 6, 2, 4]);
        assert_eq!(back.get(5, 1, 4), DisplacementVector::new(1.25, -70.5));
        assert_eq!(back.get(0, 3, 2).dx, 0.1f32 as f64);
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.bin");
        std::fs::write(&path, b"QDYN2...........").unwrap();
        assert!(matches!(read_qdyn(&path), Err(Error::Format { .. })));
        let q = DynamicsMatrix::filled(4, MatrixKind::Global, 1.0);
        write_qdyn(&q, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_qdyn(&path), Err(Error::Format { .. })));
    }
}
