//! Single-pass and self-ensemble super-resolution with a trained generator.

use std::path::Path;

use candle_core::DType;

use crate::error::{Error, Result};
use crate::imaging::{apply_transform, GeomTransform, Image};
use crate::models::{load_sr_generator, Network, SrGenerator};
use crate::training::estimate_noise_sigma;

/// Wraps an SR generator for inference on whole images.
#[derive(Debug, Clone)]
pub struct SuperResolver {
    gsr: SrGenerator,
}

impl SuperResolver {
    pub fn new(gsr: SrGenerator) -> Self {
        Self { gsr }
    }

    /// Loads the SR generator from a training or export checkpoint.
    pub fn load(checkpoint: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(load_sr_generator(checkpoint, DType::F32)?))
    }

    pub fn generator(&self) -> &SrGenerator {
        &self.gsr
    }

    pub fn scale(&self) -> usize {
        self.gsr.scale()
    }

    fn check(&self, lr: &Image) -> Result<()> {
        let c = self.gsr.config().channels;
        if lr.channels() != c {
            return Err(Error::Shape(format!("model expects {c} channels, input has {}", lr.channels())));
        }
        Ok(())
    }

    /// `C×H×W → C×sH×sW` using the noise level estimated from `lr`.
    pub fn super_resolve(&self, lr: &Image) -> Result<Image> {
        self.check(lr)?;
        let sigma = estimate_noise_sigma(lr);
        let x = lr.to_tensor(self.gsr.store().dtype())?.unsqueeze(0)?;
        Ok(Image::from_tensor(&self.gsr.forward(&x, &[sigma])?)?.clip())
    }

    /// The eight aligned branch outputs, in [`GeomTransform::all`] order.
    pub fn ensemble_branches(&self, lr: &Image) -> Result<Vec<Image>> {
        self.check(lr)?;
        GeomTransform::all()
            .into_iter()
            .map(|t| Ok(apply_transform(&self.super_resolve(&apply_transform(lr, t))?, t.inverse())))
            .collect()
    }

    /// Mean of the aligned branches, accumulated in f64, before clipping.
    pub fn ensemble_mean(&self, lr: &Image) -> Result<Image> {
        let branches = self.ensemble_branches(lr)?;
        let (c, h, w) = branches[0].shape();
        let mut acc = vec![0f64; branches[0].len()];
        for b in &branches {
            for (a, &v) in acc.iter_mut().zip(b.data()) {
                *a += v as f64;
            }
        }
        let k = branches.len() as f64;
        Image::new(c, h, w, acc.into_iter().map(|v| (v / k) as f32).collect())
    }

    /// Self-ensemble prediction: transform, super-resolve, undo, average, clip.
    pub fn super_resolve_ensemble(&self, lr: &Image) -> Result<Image> {
        Ok(self.ensemble_mean(lr)?.clip())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::bicubic_upsample;
    use crate::models::GsrConfig;

    fn tiny(seed: u64) -> SuperResolver {
        let cfg = GsrConfig { feat_maps: 4, resblocks: 1, ..GsrConfig::default() };
        SuperResolver::new(SrGenerator::new(cfg, DType::F32, seed).unwrap())
    }

    fn input(h: usize, w: usize) -> Image {
        Image::from_fn(3, h, w, |c, y, x| ((c * 31 + y * 7 + x * 13) % 17) as f32 / 17.0).unwrap()
    }

    #[test]
    fn shape_and_determinism() {
        let m = tiny(0);
        let lr = input(10, 12);
        let a = m.super_resolve(&lr).unwrap();
        assert_eq!(a.shape(), (3, 40, 48));
        assert_eq!(a, m.super_resolve(&lr).unwrap());
        assert!(a.is_in_unit_range());
        assert_eq!(m.super_resolve_ensemble(&lr).unwrap().shape(), a.shape());
    }

    #[test]
    fn zero_residual_is_clipped_bicubic() {
        let m = tiny(1);
        m.generator().zero_residual().unwrap();
        let lr = input(8, 8);
        let want = bicubic_upsample(&lr, 4).unwrap().clip();
        let got = m.super_resolve(&lr).unwrap();
        let err = got.data().iter().zip(want.data()).map(|(a, b)| (a - b).abs()).fold(0f32, f32::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn ensemble_stays_within_branch_range() {
        let m = tiny(2);
        let lr = input(6, 9);
        let branches = m.ensemble_branches(&lr).unwrap();
        let mean = m.ensemble_mean(&lr).unwrap();
        for (i, v) in mean.data().iter().enumerate() {
            let lo = branches.iter().map(|b| b.data()[i]).fold(f32::INFINITY, f32::min);
            let hi = branches.iter().map(|b| b.data()[i]).fold(f32::NEG_INFINITY, f32::max);
            assert!(*v >= lo - 1e-6 && *v <= hi + 1e-6);
        }
    }

    #[test]
    fn rejects_wrong_channel_count() {
        assert!(tiny(0).super_resolve(&Image::filled(1, 8, 8, 0.5).unwrap()).is_err());
    }
}
