//! PLRN dataset files.
//!
//! Header (little-endian): magic `PLRN`, version u32, sample count u64,
//! planes u32, height u32, width u32. Each record: 23*11*11 f32
//! observation, 6 f32 policy, f32 outcome, u8 agent id, u32 episode id,
//! u16 step index.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::engine::{ObservationPlanes, BOARD_SIZE, NUM_ACTIONS, NUM_PLANES, OBS_LEN};

use super::{DatasetError, Sample};

pub const MAGIC: &[u8; 4] = b"PLRN";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 4 + 8 + 12;
pub const RECORD_BYTES: usize = (OBS_LEN + NUM_ACTIONS + 1) * 4 + 1 + 4 + 2;

fn write_header(w: &mut impl Write, count: u64) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    for d in [NUM_PLANES, BOARD_SIZE, BOARD_SIZE] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    Ok(())
}

fn encode_record(s: &Sample, buf: &mut Vec<u8>) {
    buf.clear();
    for x in s.obs.as_slice().iter().chain(&s.pi).chain(std::iter::once(&s.z)) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.push(s.agent_id);
    buf.extend_from_slice(&s.episode_id.to_le_bytes());
    buf.extend_from_slice(&s.step_index.to_le_bytes());
}

fn decode_record(buf: &[u8]) -> Sample {
    let f = |i: usize| f32::from_le_bytes(buf[i * 4..i * 4 + 4].try_into().unwrap());
    let obs: Vec<f32> = (0..OBS_LEN).map(f).collect();
    let pi = std::array::from_fn(|a| f(OBS_LEN + a));
    let z = f(OBS_LEN + NUM_ACTIONS);
    let tail = (OBS_LEN + NUM_ACTIONS + 1) * 4;
    Sample {
        obs: ObservationPlanes::from_slice(&obs).expect("fixed length"),
        pi,
        z,
        agent_id: buf[tail],
        episode_id: u32::from_le_bytes(buf[tail + 1..tail + 5].try_into().unwrap()),
        step_index: u16::from_le_bytes(buf[tail + 5..tail + 7].try_into().unwrap()),
    }
}

pub fn write_samples(mut w: impl Write, samples: &[Sample]) -> io::Result<()> {
    write_header(&mut w, samples.len() as u64)?;
    let mut buf = Vec::with_capacity(RECORD_BYTES);
    for s in samples {
        encode_record(s, &mut buf);
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads a whole dataset. A file shorter than its header claims is an
/// error; no partial result is returned.
pub fn read_samples(mut r: impl Read) -> Result<Vec<Sample>, DatasetError> {
    let mut head = [0u8; HEADER_BYTES];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let u32_at = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(DatasetError::Version(version));
    }
    let count = u64::from_le_bytes(head[8..16].try_into().unwrap());
    let (p, h, w) = (u32_at(16), u32_at(20), u32_at(24));
    if (p as usize, h as usize, w as usize) != (NUM_PLANES, BOARD_SIZE, BOARD_SIZE) {
        return Err(DatasetError::Shape(p, h, w));
    }
    let mut out = Vec::with_capacity(count.min(1 << 16) as usize);
    let mut buf = vec![0u8; RECORD_BYTES];
    for read in 0..count {
        match r.read_exact(&mut buf) {
            Ok(()) => out.push(decode_record(&buf)),
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Err(DatasetError::Truncated { read, expected: count })
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

pub fn write_dataset(samples: &[Sample], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_samples(&mut w, samples)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Sample>, DatasetError> {
    read_samples(BufReader::new(File::open(path)?))
}

/// Streams samples to a file and fixes the header count on `finish`.
pub struct DatasetWriter {
    out: BufWriter<File>,
    count: u64,
    buf: Vec<u8>,
}

impl DatasetWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let mut out = BufWriter::new(File::create(path)?);
        write_header(&mut out, 0)?;
        Ok(Self {
            out,
            count: 0,
            buf: Vec::with_capacity(RECORD_BYTES),
        })
    }

    pub fn push(&mut self, s: &Sample) -> Result<(), DatasetError> {
        encode_record(s, &mut self.buf);
        self.out.write_all(&self.buf)?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<u64, DatasetError> {
        self.out.flush()?;
        let file = self.out.get_mut();
        file.seek(SeekFrom::Start(8))?;
        file.write_all(&self.count.to_le_bytes())?;
        file.flush()?;
        Ok(self.count)
    }
}
