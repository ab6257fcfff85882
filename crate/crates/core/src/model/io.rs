//! PWNET weight files.
//!
//! Layout (little-endian): magic `PWNET`, version u32, tensor count u32,
//! then per tensor: name length u16, UTF-8 name, rank u8, rank dims as u32,
//! and the row-major f32 data.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ModelError, ModelWeights, Tensor};

pub const MAGIC: &[u8; 5] = b"PWNET";
pub const VERSION: u32 = 1;

impl ModelWeights {
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            w.write_all(&(t.name.len() as u16).to_le_bytes())?;
            w.write_all(t.name.as_bytes())?;
            w.write_all(&[t.shape.len() as u8])?;
            for &d in &t.shape {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            let mut buf = Vec::with_capacity(t.data.len() * 4);
            for x in &t.data {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Parses a weight file and validates it against the reference
    /// configuration.
    pub fn read_from(mut r: impl Read) -> Result<Self, ModelError> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ModelError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(ModelError::Version(version));
        }
        let count = read_u32(&mut r)? as usize;
        let expected = super::NetConfig::default().tensor_specs().len();
        if count != expected {
            return Err(ModelError::TensorCount {
                expected,
                found: count,
            });
        }
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let mut b2 = [0u8; 2];
            r.read_exact(&mut b2)?;
            let mut name = vec![0u8; u16::from_le_bytes(b2) as usize];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| ModelError::BadName)?;
            let mut rank = [0u8; 1];
            r.read_exact(&mut rank)?;
            let mut shape = Vec::with_capacity(rank[0] as usize);
            for _ in 0..rank[0] {
                shape.push(read_u32(&mut r)? as usize);
            }
            let n: usize = shape.iter().product();
            // refuse absurd sizes before allocating
            if n > 1 << 24 {
                return Err(ModelError::DataLength { name, shape, len: n });
            }
            let mut raw = vec![0u8; n * 4];
            r.read_exact(&mut raw)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push(Tensor { name, shape, data });
        }
        let w = ModelWeights { tensors };
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::read_from(BufReader::new(std::fs::File::open(path)?))
    }
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn write_weights(weights: &ModelWeights, path: impl AsRef<Path>) -> Result<(), ModelError> {
    weights.validate()?;
    Ok(weights.save(path)?)
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<ModelWeights, ModelError> {
    ModelWeights::load(path)
}
