use candle_core::{DType, Tensor};

use super::{GlrConfig, Network};
use crate::error::{Error, Result};
use crate::nn::{leaky_relu, Conv2d, Init, Padding, ParamStore};

const SLOPE: f64 = 0.2;
const OUT_WEIGHT_SCALE: f64 = 0.1;

#[derive(Debug, Clone)]
struct ResBlock {
    conv1: Conv2d,
    conv2: Conv2d,
}

/// LR generator (Conv-Resnet-Conv): three head convolutions whose second and
/// third stride by 2, residual blocks, three tail convolutions, then clip.
#[derive(Debug, Clone)]
pub struct LrGenerator {
    config: GlrConfig,
    store: ParamStore,
    head: Vec<Conv2d>,
    blocks: Vec<ResBlock>,
    tail: Vec<Conv2d>,
}

impl LrGenerator {
    pub fn new(config: GlrConfig, dtype: DType, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(dtype);
        let mut init = Init::new(seed);
        let (c, f, k) = (config.channels, config.feat_maps, config.kernel);
        let pad = Padding::Reflect(k / 2);
        let strided = config.scale.trailing_zeros() as usize;
        let head = (0..3)
            .map(|i| {
                let stride = if i >= 1 && i <= strided { 2 } else { 1 };
                let in_ch = if i == 0 { c } else { f };
                Conv2d::new(&mut store, &mut init, &format!("head.{i}"), in_ch, f, k, stride, pad, true)
            })
            .collect::<Result<Vec<_>>>()?;
        let blocks = (0..config.resblocks)
            .map(|i| {
                Ok(ResBlock {
                    conv1: Conv2d::new(&mut store, &mut init, &format!("resnet.{i}.conv1"), f, f, k, 1, pad, true)?,
                    conv2: Conv2d::new(&mut store, &mut init, &format!("resnet.{i}.conv2"), f, f, k, 1, pad, true)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = (0..3)
            .map(|i| {
                let out_ch = if i == 2 { c } else { f };
                Conv2d::new(&mut store, &mut init, &format!("tail.{i}"), f, out_ch, k, 1, pad, true)
            })
            .collect::<Result<Vec<_>>>()?;
        // Start the output near mid-gray so the clip does not swallow whole
        // channels (and their gradients) before training begins.
        let last = format!("tail.{}", tail.len() - 1);
        for (suffix, scale, shift) in [("weight", OUT_WEIGHT_SCALE, 0.0), ("bias", 0.0, 0.5)] {
            let var = store.get(&format!("{last}.{suffix}")).ok_or_else(|| Error::InvalidArgument(format!("{last} has no {suffix}")))?;
            var.set(&var.as_tensor().affine(scale, shift)?)?;
        }
        Ok(Self { config, store, head, blocks, tail })
    }

    pub fn config(&self) -> &GlrConfig {
        &self.config
    }

    pub fn forward(&self, sr: &Tensor) -> Result<Tensor> {
        let (_, c, h, w) = sr.dims4()?;
        let s = self.config.scale;
        if c != self.config.channels || h % s != 0 || w % s != 0 {
            return Err(Error::Shape(format!(
                "LR generator needs {} channels and dims divisible by {s}, got {c}x{h}x{w}",
                self.config.channels
            )));
        }
        let mut x = sr.clone();
        for conv in &self.head {
            x = leaky_relu(&conv.forward(&x)?, SLOPE)?;
        }
        for b in &self.blocks {
            let r = b.conv2.forward(&leaky_relu(&b.conv1.forward(&x)?, SLOPE)?)?;
            x = (x + r)?;
        }
        for (i, conv) in self.tail.iter().enumerate() {
            x = conv.forward(&x)?;
            if i + 1 < self.tail.len() {
                x = leaky_relu(&x, SLOPE)?;
            }
        }
        Ok(x.clamp(0.0, 1.0)?)
    }
}

impl Network for LrGenerator {
    fn store(&self) -> &ParamStore {
        &self.store
    }
}
