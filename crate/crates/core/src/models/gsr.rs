use candle_core::{DType, Tensor, Var};

use super::projection::{project_l2_ball, projection_radius};
use super::resample::bicubic_resize;
use super::{GsrConfig, Network};
use crate::error::{Error, Result};
use crate::nn::{Conv2d, Init, PRelu, Padding, ParamStore};

/// Two reflection-padded convolutions, each preceded by a PReLU, plus identity skip.
#[derive(Debug, Clone)]
struct PreActBlock {
    act1: PRelu,
    conv1: Conv2d,
    act2: PRelu,
    conv2: Conv2d,
}

impl PreActBlock {
    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.conv1.forward(&self.act1.forward(x)?)?;
        let h = self.conv2.forward(&self.act2.forward(&h)?)?;
        Ok((x + h)?)
    }
}

/// Super-resolution generator: bicubic upsample → encoder → residual blocks →
/// decoder → ℓ2-ball projection → subtract from the upsampled input → clip.
#[derive(Debug, Clone)]
pub struct SrGenerator {
    config: GsrConfig,
    store: ParamStore,
    encoder: Conv2d,
    blocks: Vec<PreActBlock>,
    decoder: Conv2d,
    log_alpha: Var,
}

impl SrGenerator {
    pub const DECODER_PREFIX: &'static str = "decoder.";

    pub fn new(config: GsrConfig, dtype: DType, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(dtype);
        let mut init = Init::new(seed);
        let (c, f) = (config.channels, config.feat_maps);
        let (ek, rk) = (config.enc_dec_kernel, config.resblock_kernel);
        let encoder = Conv2d::new(&mut store, &mut init, "encoder", c, f, ek, 1, Padding::Reflect(ek / 2), true)?;
        let blocks = (0..config.resblocks)
            .map(|i| {
                let name = format!("resnet.{i}");
                Ok(PreActBlock {
                    act1: PRelu::new(&mut store, &format!("{name}.act1"), f)?,
                    conv1: Conv2d::new(&mut store, &mut init, &format!("{name}.conv1"), f, f, rk, 1, Padding::Reflect(rk / 2), true)?,
                    act2: PRelu::new(&mut store, &format!("{name}.act2"), f)?,
                    conv2: Conv2d::new(&mut store, &mut init, &format!("{name}.conv2"), f, f, rk, 1, Padding::Reflect(rk / 2), true)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let decoder = Conv2d::new(&mut store, &mut init, "decoder", f, c, ek, 1, Padding::Reflect(ek / 2), true)?;
        let log_alpha = store.add_param("projection.log_alpha", vec![config.alpha_init.ln()], &[])?;
        Ok(Self { config, store, encoder, blocks, decoder, log_alpha })
    }

    pub fn config(&self) -> &GsrConfig {
        &self.config
    }

    pub fn scale(&self) -> usize {
        self.config.scale
    }

    /// Current radius multiplier α (stored in log form so it stays positive).
    pub fn alpha(&self) -> Result<f64> {
        Ok(self.log_alpha.as_tensor().to_dtype(DType::F64)?.exp()?.to_scalar::<f64>()?)
    }

    /// Zeroes the decoder so the residual vanishes and the output is the clipped
    /// bicubic upsample.
    pub fn zero_residual(&self) -> Result<()> {
        self.store.zero_params(Self::DECODER_PREFIX)?;
        Ok(())
    }

    /// Residual estimate before projection, `N×C×sH×sW`.
    fn raw_residual(&self, upsampled: &Tensor) -> Result<Tensor> {
        let mut h = self.encoder.forward(upsampled)?;
        for b in &self.blocks {
            h = b.forward(&h)?;
        }
        self.decoder.forward(&h)
    }

    /// `lr` is `N×C×H×W`; `sigma_hat` holds one noise estimate (8-bit units) per image.
    pub fn forward(&self, lr: &Tensor, sigma_hat: &[f64]) -> Result<Tensor> {
        let (n, c, h, w) = lr.dims4()?;
        if c != self.config.channels {
            return Err(Error::Shape(format!("generator expects {} channels, got {c}", self.config.channels)));
        }
        if sigma_hat.len() != n {
            return Err(Error::Shape(format!("{} noise estimates for batch of {n}", sigma_hat.len())));
        }
        let s = self.config.scale;
        let up = bicubic_resize(lr, h * s, w * s)?;
        let residual = self.raw_residual(&up)?;
        let alpha = self.log_alpha.as_tensor().exp()?;
        let radius = projection_radius(&alpha, sigma_hat, c * h * s * w * s)?;
        let residual = project_l2_ball(&residual, &radius)?;
        Ok((up - residual)?.clamp(0.0, 1.0)?)
    }
}

impl Network for SrGenerator {
    fn store(&self) -> &ParamStore {
        &self.store
    }
}
