//! Minimal layer vocabulary over candle tensors.
//!
//! Every network owns a [`ParamStore`]: an ordered map from layer path to
//! [`Var`]. Trainable parameters and non-trainable buffers (batch-norm running
//! statistics) are kept apart so optimizers and parameter counts only see the
//! former, while checkpoints carry both.

mod checkpoint;
mod im2col;
mod layers;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{conv2d, leaky_relu, reflect_pad, BatchNorm2d, Conv2d, Linear, Padding, PRelu};

use std::collections::BTreeMap;
use std::hash::Hasher;

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Forward-pass mode. Only batch normalization behaves differently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Seeded source of initial weights.
pub struct Init {
    rng: ChaCha8Rng,
}

impl Init {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, n: usize, bound: f64) -> Vec<f64> {
        (0..n).map(|_| self.rng.random_range(-bound..=bound)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ParamStore {
    dtype: DType,
    trainable: BTreeMap<String, Var>,
    buffers: BTreeMap<String, Var>,
}

impl ParamStore {
    pub fn new(dtype: DType) -> Self {
        Self { dtype, trainable: BTreeMap::new(), buffers: BTreeMap::new() }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    fn make(&self, values: Vec<f64>, shape: &[usize]) -> Result<Var> {
        let t = Tensor::from_vec(values, shape, &Device::Cpu)?.to_dtype(self.dtype)?;
        Ok(Var::from_tensor(&t)?)
    }

    pub fn add_param(&mut self, name: impl Into<String>, values: Vec<f64>, shape: &[usize]) -> Result<Var> {
        let name = name.into();
        let var = self.make(values, shape)?;
        if self.trainable.insert(name.clone(), var.clone()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate parameter {name}")));
        }
        Ok(var)
    }

    pub fn add_buffer(&mut self, name: impl Into<String>, values: Vec<f64>, shape: &[usize]) -> Result<Var> {
        let name = name.into();
        let var = self.make(values, shape)?;
        if self.buffers.insert(name.clone(), var.clone()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate buffer {name}")));
        }
        Ok(var)
    }

    pub fn trainable(&self) -> &BTreeMap<String, Var> {
        &self.trainable
    }

    pub fn buffers(&self) -> &BTreeMap<String, Var> {
        &self.buffers
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.trainable.get(name).or_else(|| self.buffers.get(name))
    }

    /// Total number of trainable scalars.
    pub fn num_trainable(&self) -> usize {
        self.trainable.values().map(|v| v.elem_count()).sum()
    }

    /// Hash of every trainable value's bit pattern, in name order.
    pub fn fingerprint(&self) -> Result<u64> {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for (name, var) in &self.trainable {
            h.write(name.as_bytes());
            for v in var.as_tensor().flatten_all()?.to_dtype(DType::F64)?.to_vec1::<f64>()? {
                h.write_u64(v.to_bits());
            }
        }
        Ok(h.finish())
    }

    /// Sets every trainable tensor whose name starts with `prefix` to zero.
    pub fn zero_params(&self, prefix: &str) -> Result<usize> {
        let mut n = 0;
        for (_, var) in self.trainable.iter().filter(|(k, _)| k.starts_with(prefix)) {
            var.set(&var.as_tensor().zeros_like()?)?;
            n += 1;
        }
        Ok(n)
    }

    /// Snapshot of trainable parameters and buffers, keyed by name.
    pub fn named_tensors(&self) -> BTreeMap<String, Tensor> {
        self.trainable
            .iter()
            .chain(self.buffers.iter())
            .map(|(k, v)| (k.clone(), v.as_tensor().copy().expect("cpu copy")))
            .collect()
    }

    /// Overwrites values from `tensors`; every entry of this store must be present
    /// with a matching shape.
    pub fn load_named(&self, tensors: &BTreeMap<String, Tensor>) -> Result<()> {
        for (name, var) in self.trainable.iter().chain(self.buffers.iter()) {
            let t = tensors
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            if t.dims() != var.dims() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name}: checkpoint shape {:?} vs model {:?}",
                    t.dims(),
                    var.dims()
                )));
            }
            var.set(&t.to_dtype(self.dtype)?)?;
        }
        Ok(())
    }

    /// Independent copy with fresh storage.
    pub fn deep_clone(&self) -> Result<Self> {
        let copy = |m: &BTreeMap<String, Var>| -> Result<BTreeMap<String, Var>> {
            m.iter()
                .map(|(k, v)| Ok((k.clone(), Var::from_tensor(&v.as_tensor().copy()?)?)))
                .collect()
        };
        Ok(Self { dtype: self.dtype, trainable: copy(&self.trainable)?, buffers: copy(&self.buffers)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_fingerprints() {
        let mut s = ParamStore::new(DType::F64);
        s.add_param("a.weight", vec![1.0; 6], &[2, 3]).unwrap();
        s.add_param("a.bias", vec![0.5; 2], &[2]).unwrap();
        s.add_buffer("bn.running_mean", vec![0.0; 2], &[2]).unwrap();
        assert_eq!(s.num_trainable(), 8);
        assert!(s.add_param("a.bias", vec![0.0; 2], &[2]).is_err());

        let before = s.fingerprint().unwrap();
        s.get("bn.running_mean").unwrap().set(&Tensor::new(&[3.0f64, 4.0], &Device::Cpu).unwrap()).unwrap();
        assert_eq!(before, s.fingerprint().unwrap(), "buffers are not part of the fingerprint");
        assert_eq!(s.zero_params("a.w").unwrap(), 1);
        assert_ne!(before, s.fingerprint().unwrap());
        assert_eq!(s.num_trainable(), 8);
    }

    #[test]
    fn load_checks_shapes() {
        let mut s = ParamStore::new(DType::F32);
        s.add_param("w", vec![1.0; 4], &[4]).unwrap();
        let mut m = BTreeMap::new();
        m.insert("w".to_string(), Tensor::zeros(3, DType::F64, &Device::Cpu).unwrap());
        assert!(s.load_named(&m).is_err());
        m.insert("w".to_string(), Tensor::new(&[1.0f64, 2., 3., 4.], &Device::Cpu).unwrap());
        s.load_named(&m).unwrap();
        assert_eq!(s.get("w").unwrap().to_vec1::<f32>().unwrap(), vec![1., 2., 3., 4.]);
    }

    #[test]
    fn deep_clone_is_independent() {
        let mut s = ParamStore::new(DType::F64);
        s.add_param("w", vec![1.0; 3], &[3]).unwrap();
        let c = s.deep_clone().unwrap();
        s.zero_params("").unwrap();
        assert_eq!(c.get("w").unwrap().to_vec1::<f64>().unwrap(), vec![1.0; 3]);
    }
}
