//! Versioned binary trajectory checkpoints.
//!
//! Layout (little endian): magic `FRNSCKPT`, version `u32`, config hash
//! (`u32` length + bytes), step `u64`, seed `u64`, stream id `u64`,
//! `d`, modes, points (`u32` each), side `f64`, config text (`u64` length +
//! bytes), coefficient count `u64`, coefficients as interleaved `(re, im)`
//! `f64` pairs, then a CRC-32 of everything before it.

use num_complex::Complex64;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::WaveGrid;

pub const MAGIC: &[u8; 8] = b"FRNSCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: Vec<u8>,
    pub config_text: String,
    pub step: u64,
    pub seed: u64,
    pub stream_id: u64,
    pub state: SpectralField,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.state.grid();
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.config_hash.len() as u32).to_le_bytes());
        b.extend_from_slice(&self.config_hash);
        b.extend_from_slice(&self.step.to_le_bytes());
        b.extend_from_slice(&self.seed.to_le_bytes());
        b.extend_from_slice(&self.stream_id.to_le_bytes());
        b.extend_from_slice(&(g.dim() as u32).to_le_bytes());
        b.extend_from_slice(&(g.modes_per_axis() as u32).to_le_bytes());
        b.extend_from_slice(&(g.points_per_axis() as u32).to_le_bytes());
        b.extend_from_slice(&g.side().to_le_bytes());
        b.extend_from_slice(&(self.config_text.len() as u64).to_le_bytes());
        b.extend_from_slice(self.config_text.as_bytes());
        let coeffs = self.state.coeffs();
        b.extend_from_slice(&(coeffs.len() as u64).to_le_bytes());
        for z in coeffs {
            b.extend_from_slice(&z.re.to_le_bytes());
            b.extend_from_slice(&z.im.to_le_bytes());
        }
        let crc = crc32fast::hash(&b);
        b.extend_from_slice(&crc.to_le_bytes());
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 8 {
            return Err(Error::Checkpoint("file too short".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if &body[..8] != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut r = Reader { buf: body, pos: 8 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (this build reads version {VERSION})"
            )));
        }
        if crc32fast::hash(body) != stored {
            return Err(Error::Checkpoint("CRC mismatch".into()));
        }
        let hash_len = r.u32()? as usize;
        let config_hash = r.take(hash_len)?.to_vec();
        let step = r.u64()?;
        let seed = r.u64()?;
        let stream_id = r.u64()?;
        let d = r.u32()? as usize;
        let modes = r.u32()? as usize;
        let points = r.u32()? as usize;
        let side = r.f64()?;
        let text_len = r.u64()? as usize;
        let config_text = String::from_utf8(r.take(text_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("config text is not UTF-8".into()))?;
        let grid = WaveGrid::new(d, side, modes, points)?;
        let count = r.u64()? as usize;
        let mut coeffs = Vec::with_capacity(count);
        for _ in 0..count {
            let re = r.f64()?;
            let im = r.f64()?;
            coeffs.push(Complex64::new(re, im));
        }
        if r.pos != body.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let state = SpectralField::from_coeffs(grid, coeffs)?;
        Ok(Self { config_hash, config_text, step, seed, stream_id, state })
    }

    /// Writes atomically via a sibling temporary file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("truncated record".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
