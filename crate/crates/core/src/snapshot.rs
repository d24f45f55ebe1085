//! PDHL1 field snapshots: an ASCII header `PDHL1 <dim> <n> <kind>\n`
//! followed by `n^dim` little-endian `f64` values in node order.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{FaceField, GridMask};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotKind {
    Node,
    FaceX,
    FaceY,
    FaceZ,
}

impl SnapshotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SnapshotKind::Node => "node",
            SnapshotKind::FaceX => "face-x",
            SnapshotKind::FaceY => "face-y",
            SnapshotKind::FaceZ => "face-z",
        }
    }

    pub fn face(axis: usize) -> Result<Self> {
        match axis {
            0 => Ok(SnapshotKind::FaceX),
            1 => Ok(SnapshotKind::FaceY),
            2 => Ok(SnapshotKind::FaceZ),
            _ => Err(Error::Snapshot(format!("no face kind for axis {axis}"))),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(SnapshotKind::Node),
            "face-x" => Ok(SnapshotKind::FaceX),
            "face-y" => Ok(SnapshotKind::FaceY),
            "face-z" => Ok(SnapshotKind::FaceZ),
            _ => Err(Error::Snapshot(format!("unknown kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dim: usize,
    pub n: usize,
    pub kind: SnapshotKind,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn node<T: Real>(mask: &GridMask<T>, values: &[T]) -> Result<Self> {
        Self::from_parts(mask, SnapshotKind::Node, values)
    }

    /// One snapshot per face axis.
    pub fn faces<T: Real>(mask: &GridMask<T>, f: &FaceField<T>) -> Result<Vec<Self>> {
        f.axes
            .iter()
            .enumerate()
            .map(|(k, v)| Self::from_parts(mask, SnapshotKind::face(k)?, v))
            .collect()
    }

    fn from_parts<T: Real>(mask: &GridMask<T>, kind: SnapshotKind, values: &[T]) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::ShapeMismatch(format!("{} values for {} nodes", values.len(), mask.len())));
        }
        Ok(Self { dim: mask.dim, n: mask.n, kind, values: values.iter().map(|v| v.to_f64_lossy()).collect() })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "PDHL1 {} {} {}\n", self.dim, self.n, self.kind.as_str())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let mut header = Vec::new();
        r.read_until(b'\n', &mut header)?;
        let header = std::str::from_utf8(&header).map_err(|_| Error::Snapshot("header is not ASCII".into()))?;
        let parts: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
        let [magic, dim, n, kind] = parts[..] else {
            return Err(Error::Snapshot(format!("malformed header {header:?}")));
        };
        if magic != "PDHL1" {
            return Err(Error::Snapshot(format!("bad magic {magic:?}")));
        }
        let dim: usize = dim.parse().map_err(|_| Error::Snapshot(format!("bad dim {dim:?}")))?;
        let n: usize = n.parse().map_err(|_| Error::Snapshot(format!("bad n {n:?}")))?;
        if !(dim == 2 || dim == 3) {
            return Err(Error::Snapshot(format!("dim {dim}")));
        }
        let kind = SnapshotKind::parse(kind)?;
        let count = n.checked_pow(dim as u32).ok_or_else(|| Error::Snapshot("size overflow".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * 8 {
            return Err(Error::Snapshot(format!("expected {} payload bytes, found {}", count * 8, bytes.len())));
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { dim, n, kind, values })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = GridMask::<f64>::unperforated_box(2, 0.0, 1.0, 5).unwrap();
        let vals: Vec<f64> = (0..m.len()).map(|i| (i as f64).sqrt() * -1.5e-300).collect();
        let s = Snapshot::node(&m, &vals).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"PDHL1 2 5 node\n"));
        assert_eq!(buf.len(), 15 + 25 * 8);
        let back = Snapshot::read_from(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut buf = b"PDHL1 2 3 face-y\n".to_vec();
        buf.extend_from_slice(&[0u8; 8 * 8]);
        assert!(matches!(Snapshot::read_from(&buf[..]), Err(Error::Snapshot(_))));
        assert!(Snapshot::read_from(&b"PDHL2 2 3 node\n"[..]).is_err());
    }
}
