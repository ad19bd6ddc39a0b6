use candle_core::{DType, Tensor};

use super::{DxConfig, Network};
use crate::error::{Error, Result};
use crate::nn::{leaky_relu, BatchNorm2d, Conv2d, Init, Linear, Mode, Padding, ParamStore};

const SLOPE: f64 = 0.2;

/// HR discriminator: ten convolutions alternating 3×3/stride 1 and 4×4/stride 2,
/// batch norm after all but the first, leaky ReLU, then global average pooling
/// and a linear layer to one raw logit per image.
#[derive(Debug, Clone)]
pub struct HrDiscriminator {
    config: DxConfig,
    store: ParamStore,
    convs: Vec<Conv2d>,
    norms: Vec<Option<BatchNorm2d>>,
    head: Linear,
}

impl HrDiscriminator {
    pub fn new(config: DxConfig, dtype: DType, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(dtype);
        let mut init = Init::new(seed);
        let widths = config.widths();
        let mut convs = Vec::new();
        let mut norms = Vec::new();
        let mut in_ch = config.channels;
        for (i, &out_ch) in widths.iter().enumerate() {
            let (k, stride) = if i % 2 == 0 { (3, 1) } else { (4, 2) };
            convs.push(Conv2d::new(&mut store, &mut init, &format!("conv.{i}"), in_ch, out_ch, k, stride, Padding::Zero(1), true)?);
            norms.push(if i == 0 { None } else { Some(BatchNorm2d::new(&mut store, &format!("bn.{i}"), out_ch)?) });
            in_ch = out_ch;
        }
        let head = Linear::new(&mut store, &mut init, "head", in_ch, 1)?;
        Ok(Self { config, store, convs, norms, head })
    }

    pub fn config(&self) -> &DxConfig {
        &self.config
    }

    /// Raw logits, shape `[N]`.
    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let (_, c, h, w) = x.dims4()?;
        let min = self.config.min_input();
        if c != self.config.channels || h < min || w < min {
            return Err(Error::Shape(format!("HR discriminator needs {} channels and >= {min} px, got {c}x{h}x{w}", self.config.channels)));
        }
        let mut x = x.clone();
        for (conv, norm) in self.convs.iter().zip(&self.norms) {
            x = conv.forward(&x)?;
            if let Some(bn) = norm {
                x = bn.forward(&x, mode)?;
            }
            x = leaky_relu(&x, SLOPE)?;
        }
        let pooled = x.mean(3)?.mean(2)?;
        Ok(self.head.forward(&pooled)?.squeeze(1)?)
    }
}

impl Network for HrDiscriminator {
    fn store(&self) -> &ParamStore {
        &self.store
    }
}
