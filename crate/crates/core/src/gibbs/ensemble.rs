//! Immutable sample ensembles and the FIGE file format.
//!
//! Layout: magic `FIGE`, `u16` version, `u32` n, `u32` m, `u64` count, then
//! `count · m` complex128 matrices (row-major, little-endian), then a JSON
//! metadata block running to the end of the file.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{fingerprint, MatrixTuple, Seed};

use super::sampler::{Diagnostics, SamplerOptions};

pub const FIGE_MAGIC: &[u8; 4] = b"FIGE";
pub const FIGE_VERSION: u16 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    /// What produced the samples, e.g. `gibbs` or `import`.
    pub source: String,
    pub potential: Option<String>,
    pub potential_hash: Option<String>,
    pub c: Option<f64>,
    pub seed: Option<Seed>,
    pub sampler: Option<SamplerOptions>,
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    n: usize,
    m: usize,
    samples: Vec<MatrixTuple>,
    meta: EnsembleMeta,
}

impl Ensemble {
    pub fn new(samples: Vec<MatrixTuple>, meta: EnsembleMeta) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("ensemble needs at least one sample".into()))?;
        let (n, m) = (first.n(), first.m());
        if samples.iter().any(|s| s.n() != n || s.m() != m) {
            return Err(Error::DimensionMismatch("samples must share (n, m)".into()));
        }
        Ok(Self { n, m, samples, meta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[MatrixTuple] {
        &self.samples
    }

    pub fn meta(&self) -> &EnsembleMeta {
        &self.meta
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.samples)
    }

    /// Entrywise mean tuple.
    pub fn mean(&self) -> MatrixTuple {
        let mut acc = MatrixTuple::zeros(self.n, self.m);
        for s in &self.samples {
            acc.axpy(1.0, s);
        }
        acc.scale(1.0 / self.len() as f64)
    }

    /// `E ‖X‖²` over the samples.
    pub fn mean_norm_sq(&self) -> f64 {
        self.samples.iter().map(MatrixTuple::norm_sq).sum::<f64>() / self.len() as f64
    }

    /// Conjugate every sample by the same unitary `u`.
    pub fn conjugate_by(&self, u: &crate::matcore::CMatrix) -> Result<Self> {
        if u.n() != self.n {
            return Err(Error::DimensionMismatch(format!("unitary of size {} for n = {}", u.n(), self.n)));
        }
        let samples = self.samples.iter().map(|s| s.conjugate_by(u)).collect();
        Ok(Self {
            n: self.n,
            m: self.m,
            samples,
            meta: self.meta.clone(),
        })
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(FIGE_MAGIC)?;
        w.write_all(&FIGE_VERSION.to_le_bytes())?;
        let n = u32::try_from(self.n).map_err(|_| Error::InvalidArgument("n too large".into()))?;
        let m = u32::try_from(self.m).map_err(|_| Error::InvalidArgument("m too large".into()))?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&m.to_le_bytes())?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        for s in &self.samples {
            s.write_le(w)?;
        }
        serde_json::to_writer(&mut *w, &self.meta)?;
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FIGE_MAGIC {
            return Err(Error::Format("missing FIGE magic".into()));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != FIGE_VERSION {
            return Err(Error::Format(format!("unsupported FIGE version {version}")));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        if n == 0 || m == 0 || count == 0 {
            return Err(Error::Format(format!("empty ensemble header (n {n}, m {m}, count {count})")));
        }
        let mut samples = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            samples.push(MatrixTuple::read_le(r, n, m).map_err(|e| match e {
                Error::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
                    Error::Format("truncated FIGE sample data".into())
                }
                other => other,
            })?);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        let meta = if rest.iter().all(u8::is_ascii_whitespace) {
            EnsembleMeta::default()
        } else {
            serde_json::from_slice(&rest)?
        };
        Self::new(samples, meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::sample_ginibre;

    fn small() -> Ensemble {
        let samples = (0..3).map(|k| sample_ginibre(2, 2, Seed::new(9, k)).unwrap()).collect();
        Ensemble::new(
            samples,
            EnsembleMeta {
                source: "test".into(),
                seed: Some(Seed::new(9, 0)),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn fige_round_trip() {
        let e = small();
        let mut buf = Vec::new();
        e.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"FIGE");
        let back = Ensemble::read(&mut buf.as_slice()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn truncated_file_is_format_error() {
        let mut buf = Vec::new();
        small().write(&mut buf).unwrap();
        buf.truncate(40);
        assert!(matches!(Ensemble::read(&mut buf.as_slice()), Err(Error::Format(_))));
        assert!(matches!(Ensemble::read(&mut &b"NOPE"[..]), Err(Error::Format(_))));
    }

    #[test]
    fn mixed_shapes_rejected() {
        let a = sample_ginibre(2, 1, Seed::new(1, 0)).unwrap();
        let b = sample_ginibre(3, 1, Seed::new(1, 1)).unwrap();
        assert!(Ensemble::new(vec![a, b], EnsembleMeta::default()).is_err());
    }
}
