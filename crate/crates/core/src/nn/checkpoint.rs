//! Versioned binary checkpoint: a JSON header plus named little-endian tensors.
//!
//! ```text
//! magic        8 bytes  "SRCYCKPT"
//! version      u32
//! header_len   u32, then header_len bytes of UTF-8 JSON
//! tensor_count u32
//! per tensor:
//!   name_len u32, name bytes (UTF-8)
//!   dtype    u8   (0 = f32, 1 = f64)
//!   ndim     u8,  then ndim × u64 dims
//!   data     product(dims) × (4 | 8) bytes, little-endian, row-major
//! ```
//! All integers are little-endian. Tensors are written in name order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use candle_core::{DType, Device, Tensor};

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SRCYCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: serde_json::Value,
    pub tensors: BTreeMap<String, Tensor>,
}

impl Checkpoint {
    pub fn new(header: serde_json::Value) -> Self {
        Self { header, tensors: BTreeMap::new() }
    }

    pub fn insert_prefixed(&mut self, prefix: &str, tensors: BTreeMap<String, Tensor>) {
        for (k, v) in tensors {
            self.tensors.insert(format!("{prefix}{k}"), v);
        }
    }

    /// Entries under `prefix`, with the prefix stripped.
    pub fn prefixed(&self, prefix: &str) -> BTreeMap<String, Tensor> {
        self.tensors
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(prefix).map(|s| (s.to_string(), v.clone())))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            let code: u8 = match t.dtype() {
                DType::F32 => 0,
                DType::F64 => 1,
                other => return Err(Error::Checkpoint(format!("unsupported dtype {other:?} for {name}"))),
            };
            w.write_all(&[code, t.rank() as u8])?;
            for &d in t.dims() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            let flat = t.flatten_all()?;
            if code == 0 {
                for v in flat.to_vec1::<f32>()? {
                    w.write_all(&v.to_le_bytes())?;
                }
            } else {
                for v in flat.to_vec1::<f64>()? {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let header_len = read_u32(r)? as usize;
        let mut header = vec![0u8; header_len];
        r.read_exact(&mut header)?;
        let header = serde_json::from_slice(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let count = read_u32(r)?;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let name_len = read_u32(r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|e| Error::Checkpoint(e.to_string()))?;
            let mut code = [0u8; 2];
            r.read_exact(&mut code)?;
            let dims = (0..code[1])
                .map(|_| read_u64(r).map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().product();
            let t = match code[0] {
                0 => {
                    let mut buf = vec![0u8; n * 4];
                    r.read_exact(&mut buf)?;
                    let v: Vec<f32> = buf.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
                    Tensor::from_vec(v, dims, &Device::Cpu)?
                }
                1 => {
                    let mut buf = vec![0u8; n * 8];
                    r.read_exact(&mut buf)?;
                    let v: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
                    Tensor::from_vec(v, dims, &Device::Cpu)?
                }
                other => return Err(Error::Checkpoint(format!("unknown dtype code {other} for {name}"))),
            };
            tensors.insert(name, t);
        }
        Ok(Self { header, tensors })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
