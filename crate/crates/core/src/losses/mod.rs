//! Generator and discriminator objectives.

mod adversarial;
mod perceptual;
mod pixel;
mod structural;

pub use adversarial::{ragan_discriminator_loss, ragan_generator_loss, softplus};
pub use perceptual::{
    feature_extractor, perceptual_loss, ConvFeatures, FeatureExtractor, FeatureSource, IdentityFeatures,
};
pub use pixel::{content_l1, cyclic_loss, tv_discrepancy_loss};
pub use structural::{msssim_loss, ssim_loss};

use std::fmt;
use std::str::FromStr;

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss weight presets selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossPreset {
    /// Perceptual + GAN + TV + 10·L1 + 10·cycle.
    Perceptual,
    /// Drops the perceptual term and adds SSIM and MS-SSIM terms.
    Structural,
}

impl FromStr for LossPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perceptual" => Ok(LossPreset::Perceptual),
            "structural" => Ok(LossPreset::Structural),
            other => Err(Error::InvalidArgument(format!("unknown loss preset {other:?} (perceptual|structural)"))),
        }
    }
}

impl fmt::Display for LossPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossPreset::Perceptual => "perceptual",
            LossPreset::Structural => "structural",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_per: f64,
    pub w_gan: f64,
    pub w_tv: f64,
    pub w_l1: f64,
    pub w_cyc: f64,
    pub w_ssim: f64,
    pub w_msssim: f64,
}

impl LossWeights {
    pub fn preset(p: LossPreset) -> Self {
        match p {
            LossPreset::Perceptual => Self { w_per: 1.0, w_gan: 1.0, w_tv: 1.0, w_l1: 10.0, w_cyc: 10.0, w_ssim: 0.0, w_msssim: 0.0 },
            LossPreset::Structural => Self { w_per: 0.0, w_gan: 1.0, w_tv: 1.0, w_l1: 10.0, w_cyc: 10.0, w_ssim: 1.0, w_msssim: 1.0 },
        }
    }

    pub fn zero() -> Self {
        Self { w_per: 0.0, w_gan: 0.0, w_tv: 0.0, w_l1: 0.0, w_cyc: 0.0, w_ssim: 0.0, w_msssim: 0.0 }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            w_per: self.w_per * k,
            w_gan: self.w_gan * k,
            w_tv: self.w_tv * k,
            w_l1: self.w_l1 * k,
            w_cyc: self.w_cyc * k,
            w_ssim: self.w_ssim * k,
            w_msssim: self.w_msssim * k,
        }
    }

    fn as_array(&self) -> [f64; 7] {
        [self.w_per, self.w_gan, self.w_tv, self.w_l1, self.w_cyc, self.w_ssim, self.w_msssim]
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("loss weights must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }

    /// Weighted sum of already-evaluated terms.
    pub fn total(&self, t: &LossTerms) -> f64 {
        self.as_array().iter().zip(t.as_array()).map(|(w, v)| w * v).sum()
    }
}

/// Unweighted loss values, one per term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub l_per: f64,
    pub l_gan: f64,
    pub l_tv: f64,
    pub l_l1: f64,
    pub l_cyc: f64,
    pub l_ssim: f64,
    pub l_msssim: f64,
}

impl LossTerms {
    pub fn splat(v: f64) -> Self {
        Self { l_per: v, l_gan: v, l_tv: v, l_l1: v, l_cyc: v, l_ssim: v, l_msssim: v }
    }

    fn as_array(&self) -> [f64; 7] {
        [self.l_per, self.l_gan, self.l_tv, self.l_l1, self.l_cyc, self.l_ssim, self.l_msssim]
    }

    pub fn all_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Per-term breakdown plus the weighted total, as logged every interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub terms: LossTerms,
    pub total: f64,
}

impl fmt::Display for LossBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.terms;
        write!(
            f,
            "per={} gan={} tv={} l1={} cyc={} ssim={} msssim={} total={}",
            t.l_per, t.l_gan, t.l_tv, t.l_l1, t.l_cyc, t.l_ssim, t.l_msssim, self.total
        )
    }
}

/// Everything the composite generator objective looks at for one batch.
pub struct GeneratorLossInputs<'a> {
    /// SR output `ŷ`, `N×C×sH×sW`.
    pub sr: &'a Tensor,
    pub hr: &'a Tensor,
    /// HR discriminator logits on real and generated images.
    pub dx_real: &'a Tensor,
    pub dx_fake: &'a Tensor,
    /// Cycle branch, when enabled.
    pub cycle: Option<CycleInputs<'a>>,
}

pub struct CycleInputs<'a> {
    pub lr: &'a Tensor,
    /// `G_LR(ŷ)`.
    pub lr_rec: &'a Tensor,
    /// LR discriminator patch logits on real LR and on `G_LR(ŷ)`.
    pub dy_real: &'a Tensor,
    pub dy_fake: &'a Tensor,
}

/// Weighted generator objective and its unweighted breakdown.
///
/// The adversarial term sums the HR and (with the cycle branch) LR
/// relativistic generator losses; the cycle term is 0 without the branch.
pub fn composite_generator_loss(
    inputs: &GeneratorLossInputs<'_>,
    weights: &LossWeights,
    phi: &dyn FeatureExtractor,
) -> Result<(Tensor, LossBreakdown)> {
    weights.validate()?;
    let sr = inputs.sr;
    let hr = inputs.hr;
    let zero = sr.zeros_like()?.sum_all()?;

    let per = perceptual_loss(sr, hr, phi)?;
    let mut gan = ragan_generator_loss(inputs.dx_real, inputs.dx_fake)?;
    let tv = tv_discrepancy_loss(sr, hr)?;
    let l1 = content_l1(sr, hr)?;
    let ssim = ssim_loss(sr, hr)?;
    let msssim = msssim_loss(sr, hr)?;
    let cyc = match &inputs.cycle {
        Some(c) => {
            gan = (gan + ragan_generator_loss(c.dy_real, c.dy_fake)?)?;
            cyclic_loss(c.lr_rec, c.lr)?
        }
        None => zero.clone(),
    };

    let weighted = [
        (weights.w_per, &per),
        (weights.w_gan, &gan),
        (weights.w_tv, &tv),
        (weights.w_l1, &l1),
        (weights.w_cyc, &cyc),
        (weights.w_ssim, &ssim),
        (weights.w_msssim, &msssim),
    ];
    let mut total = zero;
    for (w, term) in weighted {
        total = (total + (term * w)?)?;
    }
    let v = |t: &Tensor| -> Result<f64> { Ok(t.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?) };
    let terms = LossTerms {
        l_per: v(&per)?,
        l_gan: v(&gan)?,
        l_tv: v(&tv)?,
        l_l1: v(&l1)?,
        l_cyc: v(&cyc)?,
        l_ssim: v(&ssim)?,
        l_msssim: v(&msssim)?,
    };
    let breakdown = LossBreakdown { terms, total: v(&total)? };
    Ok((total, breakdown))
}
