use candle_core::{DType, Tensor};

use super::{DyConfig, Network};
use crate::error::{Error, Result};
use crate::nn::{leaky_relu, BatchNorm2d, Conv2d, Init, Mode, Padding, ParamStore};

const SLOPE: f64 = 0.2;

/// Patch-level LR discriminator: strided 5×5 convolutions with batch norm and
/// leaky ReLU, then a 5×5 convolution to a one-channel logit map.
#[derive(Debug, Clone)]
pub struct LrDiscriminator {
    config: DyConfig,
    store: ParamStore,
    convs: Vec<(Conv2d, BatchNorm2d)>,
    out: Conv2d,
}

impl LrDiscriminator {
    pub fn new(config: DyConfig, dtype: DType, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(dtype);
        let mut init = Init::new(seed);
        let k = config.kernel;
        let mut in_ch = config.channels;
        let mut convs = Vec::new();
        for (i, &out_ch) in config.widths.iter().enumerate() {
            let conv = Conv2d::new(&mut store, &mut init, &format!("conv.{i}"), in_ch, out_ch, k, 2, Padding::Zero(k / 2), true)?;
            let bn = BatchNorm2d::new(&mut store, &format!("bn.{i}"), out_ch)?;
            convs.push((conv, bn));
            in_ch = out_ch;
        }
        let out = Conv2d::new(&mut store, &mut init, "out", in_ch, 1, k, 1, Padding::Zero(k / 2), true)?;
        Ok(Self { config, store, convs, out })
    }

    pub fn config(&self) -> &DyConfig {
        &self.config
    }

    /// Raw patch logits, shape `N×1×h′×w′`.
    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let (_, c, h, w) = x.dims4()?;
        if c != self.config.channels || h < 2 || w < 2 {
            return Err(Error::Shape(format!("LR discriminator got {c}x{h}x{w}")));
        }
        let mut x = x.clone();
        for (conv, bn) in &self.convs {
            x = leaky_relu(&bn.forward(&conv.forward(&x)?, mode)?, SLOPE)?;
        }
        self.out.forward(&x)
    }
}

impl Network for LrDiscriminator {
    fn store(&self) -> &ParamStore {
        &self.store
    }
}
