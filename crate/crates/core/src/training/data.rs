use std::path::Path;

use candle_core::{DType, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::degradation::{degrade, read_manifest, DegradationSpec};
use crate::error::{Error, Result};
use crate::imaging::{batch_to_tensor, extract_patch_pair, load_image, Image};

/// An aligned `(y, x)` training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub name: String,
    pub lr: Image,
    pub hr: Image,
}

/// Paired LR/HR images sharing one scale factor.
#[derive(Debug, Clone)]
pub struct PairedDataset {
    pairs: Vec<Pair>,
    scale: usize,
}

/// One mini-batch as `N×C×h×w` LR and `N×C×sh×sw` HR tensors.
#[derive(Debug, Clone)]
pub struct Batch {
    pub lr: Tensor,
    pub hr: Tensor,
}

impl PairedDataset {
    pub fn new(pairs: Vec<Pair>, scale: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for p in &pairs {
            let (c, h, w) = p.lr.shape();
            if p.hr.shape() != (c, h * scale, w * scale) {
                return Err(Error::Shape(format!(
                    "{}: hr {:?} is not {scale}x lr {:?}",
                    p.name,
                    p.hr.shape(),
                    p.lr.shape()
                )));
            }
        }
        Ok(Self { pairs, scale })
    }

    /// Loads every row of a degradation manifest.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let rows = read_manifest(path)?;
        let scale = rows.first().map(|r| r.scale).ok_or(Error::EmptyDataset)?;
        let pairs = rows
            .iter()
            .map(|r| {
                if r.scale != scale {
                    return Err(Error::InvalidArgument(format!("manifest mixes scales {scale} and {}", r.scale)));
                }
                let name = r.hr_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                Ok(Pair { name, lr: load_image(&r.lr_path)?, hr: load_image(&r.hr_path)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs, scale)
    }

    /// `n` procedurally generated HR images of side `hr_side`, each degraded
    /// with `spec` and seed `spec.seed + i`.
    pub fn synthetic(n: usize, hr_side: usize, spec: &DegradationSpec, seed: u64) -> Result<Self> {
        let pairs = (0..n)
            .map(|i| {
                let hr = synthetic_hr(3, hr_side, seed.wrapping_add(i as u64))?;
                let lr = degrade(&hr, &DegradationSpec { seed: spec.seed.wrapping_add(i as u64), ..*spec })?;
                Ok(Pair { name: format!("synthetic_{i:03}.png"), lr, hr })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs, spec.scale)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn channels(&self) -> usize {
        self.pairs[0].lr.channels()
    }

    /// Draws `batch_size` pairs with replacement and one aligned random patch from each.
    pub fn sample_batch<R: Rng + ?Sized>(&self, rng: &mut R, batch_size: usize, lr_patch: usize, dtype: DType) -> Result<Batch> {
        let mut lrs = Vec::with_capacity(batch_size);
        let mut hrs = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let p = &self.pairs[rng.random_range(0..self.pairs.len())];
            let (l, h) = extract_patch_pair(&p.hr, &p.lr, lr_patch, self.scale, rng)?;
            lrs.push(l);
            hrs.push(h);
        }
        Ok(Batch { lr: batch_to_tensor(&lrs, dtype)?, hr: batch_to_tensor(&hrs, dtype)? })
    }
}

/// Smooth procedural texture in `[0.05, 0.95]`: a few random oriented
/// sinusoids plus a sharp-edged disc.
pub fn synthetic_hr(channels: usize, side: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f32; 5]> = (0..4)
        .map(|_| {
            let theta = rng.random_range(0.0..std::f32::consts::TAU);
            let freq = rng.random_range(0.02..0.25f32);
            [theta.cos() * freq, theta.sin() * freq, rng.random_range(0.0..6.3), rng.random_range(0.3..1.0), 0.0]
        })
        .collect();
    let tint: Vec<f32> = (0..channels).map(|_| rng.random_range(0.6..1.0)).collect();
    let (cy, cx) = (rng.random_range(0.0..side as f32), rng.random_range(0.0..side as f32));
    let radius = rng.random_range(0.15..0.4) * side as f32;
    let disc = rng.random_range(-0.3..0.3f32);
    let norm: f32 = waves.iter().map(|w| w[3]).sum();
    Image::from_fn(channels, side, side, |c, y, x| {
        let (yf, xf) = (y as f32, x as f32);
        let s: f32 = waves.iter().map(|w| w[3] * (w[0] * xf + w[1] * yf + w[2] + c as f32).sin()).sum();
        let mut v = 0.5 + 0.3 * tint[c] * s / norm;
        if (yf - cy).powi(2) + (xf - cx).powi(2) < radius * radius {
            v += disc;
        }
        v.clamp(0.05, 0.95)
    })
}
