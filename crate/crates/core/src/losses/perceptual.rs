//! Feature-space L1 loss with a pluggable frozen feature extractor.

use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};

use crate::error::{Error, Result};
use crate::nn::{conv2d, Checkpoint, Init, Padding};

/// A frozen feature map φ. Implementations must be deterministic and never
/// expose trainable state.
pub trait FeatureExtractor: Send + Sync {
    fn name(&self) -> &str;
    fn features(&self, x: &Tensor) -> Result<Tensor>;
}

/// φ(x) = x; reduces the feature loss to plain L1.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityFeatures;

impl FeatureExtractor for IdentityFeatures {
    fn name(&self) -> &str {
        "identity"
    }

    fn features(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.clone())
    }
}

#[derive(Debug, Clone)]
struct Stage {
    weight: Tensor,
    bias: Tensor,
    stride: usize,
}

/// Stack of 3×3 convolution + ReLU stages (zero padding 1), read out after
/// `output_stage` stages.
#[derive(Debug, Clone)]
pub struct ConvFeatures {
    name: String,
    stages: Vec<Stage>,
    output_stage: usize,
}

pub const FALLBACK_WIDTHS: [usize; 3] = [16, 32, 64];
pub const FALLBACK_STRIDES: [usize; 3] = [1, 2, 2];

impl ConvFeatures {
    /// Built-in extractor used when no pretrained weights are available.
    ///
    /// Weights come from `Init::new(0)` in stage order, each stage drawing
    /// `out·in·9` values from `U(−sqrt(6/fan_in), sqrt(6/fan_in))` with
    /// `fan_in = in·9`; biases are zero.
    pub fn fallback(channels: usize) -> Result<Self> {
        let mut init = Init::new(0);
        let mut in_ch = channels;
        let mut stages = Vec::new();
        for (&out_ch, &stride) in FALLBACK_WIDTHS.iter().zip(&FALLBACK_STRIDES) {
            let fan_in = in_ch * 9;
            let w = init.uniform(out_ch * fan_in, (6.0 / fan_in as f64).sqrt());
            stages.push(Stage {
                weight: Tensor::from_vec(w, (out_ch, in_ch, 3, 3), &candle_core::Device::Cpu)?,
                bias: Tensor::zeros(out_ch, DType::F64, &candle_core::Device::Cpu)?,
                stride,
            });
            in_ch = out_ch;
        }
        Ok(Self { name: "fallback-conv3".into(), output_stage: stages.len(), stages })
    }

    /// Loads pretrained stages from a checkpoint whose header carries
    /// `{"format": "feature-extractor", "strides": [...], "output_stage": n}`
    /// and tensors `stage.{i}.weight` / `stage.{i}.bias`.
    pub fn load(path: &Path) -> Result<Self> {
        let unavailable = |why: String| Error::FeatureExtractorUnavailable(why);
        let ck = Checkpoint::load(path).map_err(|e| unavailable(format!("{}: {e}", path.display())))?;
        if ck.header.get("format").and_then(|v| v.as_str()) != Some("feature-extractor") {
            return Err(unavailable(format!("{} is not a feature-extractor file", path.display())));
        }
        let strides: Vec<usize> = serde_json::from_value(ck.header["strides"].clone())
            .map_err(|e| unavailable(format!("strides: {e}")))?;
        let output_stage = ck.header["output_stage"].as_u64().unwrap_or(strides.len() as u64) as usize;
        let stages = strides
            .iter()
            .enumerate()
            .map(|(i, &stride)| {
                let get = |k: &str| {
                    ck.tensors
                        .get(&format!("stage.{i}.{k}"))
                        .cloned()
                        .ok_or_else(|| unavailable(format!("missing stage.{i}.{k}")))
                };
                Ok(Stage { weight: get("weight")?, bias: get("bias")?, stride })
            })
            .collect::<Result<Vec<_>>>()?;
        if output_stage == 0 || output_stage > stages.len() {
            return Err(unavailable(format!("output stage {output_stage} out of range")));
        }
        Ok(Self { name: path.display().to_string(), stages, output_stage })
    }

    pub fn with_output_stage(mut self, stage: usize) -> Result<Self> {
        if stage == 0 || stage > self.stages.len() {
            return Err(Error::InvalidArgument(format!("output stage {stage} out of range")));
        }
        self.output_stage = stage;
        Ok(self)
    }
}

impl FeatureExtractor for ConvFeatures {
    fn name(&self) -> &str {
        &self.name
    }

    fn features(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for s in &self.stages[..self.output_stage] {
            let w = s.weight.to_dtype(x.dtype())?;
            let b = s.bias.to_dtype(x.dtype())?.reshape((1, (), 1, 1))?;
            h = conv2d(&h, &w, Padding::Zero(1), s.stride)?.broadcast_add(&b)?.relu()?;
        }
        Ok(h)
    }
}

/// Where the perceptual feature map comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSource {
    Fallback,
    Identity,
    Pretrained(PathBuf),
}

pub fn feature_extractor(source: &FeatureSource, channels: usize) -> Result<Box<dyn FeatureExtractor>> {
    Ok(match source {
        FeatureSource::Fallback => Box::new(ConvFeatures::fallback(channels)?),
        FeatureSource::Identity => Box::new(IdentityFeatures),
        FeatureSource::Pretrained(p) => Box::new(ConvFeatures::load(p)?),
    })
}

/// Mean absolute difference between `φ(sr)` and `φ(hr)`.
pub fn perceptual_loss(sr: &Tensor, hr: &Tensor, phi: &dyn FeatureExtractor) -> Result<Tensor> {
    if sr.dims() != hr.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", sr.dims(), hr.dims())));
    }
    Ok((phi.features(sr)? - phi.features(hr)?)?.abs()?.mean_all()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::content_l1;
    use candle_core::Device;

    fn rand(seed: u64) -> Tensor {
        let v = Init::new(seed).uniform(2 * 3 * 12 * 12, 0.5);
        (Tensor::from_vec(v, (2, 3, 12, 12), &Device::Cpu).unwrap() + 0.5).unwrap()
    }

    fn val(t: Tensor) -> f64 {
        t.to_scalar::<f64>().unwrap()
    }

    #[test]
    fn zero_at_identity_and_symmetric() {
        let phi = ConvFeatures::fallback(3).unwrap();
        let (a, b) = (rand(1), rand(2));
        assert_eq!(val(perceptual_loss(&a, &a, &phi).unwrap()), 0.0);
        let ab = val(perceptual_loss(&a, &b, &phi).unwrap());
        assert_eq!(ab, val(perceptual_loss(&b, &a, &phi).unwrap()));
        assert!(ab > 0.0);
    }

    #[test]
    fn identity_features_reduce_to_l1() {
        let (a, b) = (rand(3), rand(4));
        assert_eq!(
            val(perceptual_loss(&a, &b, &IdentityFeatures).unwrap()),
            val(content_l1(&a, &b).unwrap())
        );
    }

    #[test]
    fn fallback_is_deterministic() {
        let a = rand(5);
        let f1 = ConvFeatures::fallback(3).unwrap().features(&a).unwrap();
        let f2 = ConvFeatures::fallback(3).unwrap().features(&a).unwrap();
        assert_eq!(f1.dims(), &[2, 64, 3, 3]);
        assert_eq!(
            f1.flatten_all().unwrap().to_vec1::<f64>().unwrap(),
            f2.flatten_all().unwrap().to_vec1::<f64>().unwrap()
        );
    }

    #[test]
    fn missing_pretrained_asks_for_fallback() {
        let err = feature_extractor(&FeatureSource::Pretrained("/no/such/vgg.ckpt".into()), 3).err().unwrap();
        assert!(matches!(err, Error::FeatureExtractorUnavailable(_)));
        assert!(err.to_string().contains("fallback"));
    }

    #[test]
    fn pretrained_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("phi.ckpt");
        let mut ck = Checkpoint::new(serde_json::json!({"format": "feature-extractor", "strides": [1], "output_stage": 1}));
        ck.tensors.insert("stage.0.weight".into(), Tensor::ones((4, 3, 3, 3), DType::F32, &Device::Cpu).unwrap());
        ck.tensors.insert("stage.0.bias".into(), Tensor::zeros(4, DType::F32, &Device::Cpu).unwrap());
        ck.save(&p).unwrap();
        let phi = feature_extractor(&FeatureSource::Pretrained(p), 3).unwrap();
        assert_eq!(phi.features(&rand(1)).unwrap().dims(), &[2, 4, 12, 12]);
    }
}
