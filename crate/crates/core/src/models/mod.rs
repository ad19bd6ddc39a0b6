//! The four networks: SR generator, HR discriminator, LR generator and
//! patch-level LR discriminator, plus the checkpoint container that holds them.

mod dx;
mod dy;
mod glr;
mod gsr;
pub mod projection;
mod resample;

pub use dx::HrDiscriminator;
pub use dy::LrDiscriminator;
pub use glr::LrGenerator;
pub use gsr::SrGenerator;
pub use projection::{project_l2_ball, projection_radius, ProjectionParams};
pub use resample::bicubic_resize;

use std::path::Path;

use candle_core::DType;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Checkpoint, ParamStore};

pub trait Network {
    fn store(&self) -> &ParamStore;
}

/// Total number of trainable scalars in `net`.
pub fn count_parameters(net: &dyn Network) -> usize {
    net.store().num_trainable()
}

fn check_scale(scale: usize) -> Result<()> {
    if matches!(scale, 1 | 2 | 4) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("scale {scale} not in {{1, 2, 4}}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsrConfig {
    pub channels: usize,
    pub feat_maps: usize,
    pub enc_dec_kernel: usize,
    pub resblocks: usize,
    pub resblock_kernel: usize,
    pub scale: usize,
    /// Initial projection radius multiplier.
    pub alpha_init: f64,
}

impl Default for GsrConfig {
    fn default() -> Self {
        Self { channels: 3, feat_maps: 64, enc_dec_kernel: 5, resblocks: 5, resblock_kernel: 3, scale: 4, alpha_init: 2.0 }
    }
}

impl GsrConfig {
    pub fn validate(&self) -> Result<()> {
        check_scale(self.scale)?;
        if self.enc_dec_kernel % 2 == 0 || self.resblock_kernel % 2 == 0 {
            return Err(Error::InvalidArgument("generator kernels must be odd".into()));
        }
        if !(self.alpha_init > 0.0) {
            return Err(Error::InvalidArgument("alpha_init must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlrConfig {
    pub channels: usize,
    pub feat_maps: usize,
    pub kernel: usize,
    pub resblocks: usize,
    pub scale: usize,
}

impl Default for GlrConfig {
    fn default() -> Self {
        Self { channels: 3, feat_maps: 64, kernel: 3, resblocks: 6, scale: 4 }
    }
}

impl GlrConfig {
    pub fn validate(&self) -> Result<()> {
        check_scale(self.scale)?;
        if self.kernel % 2 == 0 {
            return Err(Error::InvalidArgument("LR generator kernel must be odd".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DxConfig {
    pub channels: usize,
    pub base_width: usize,
    pub max_width: usize,
    pub layers: usize,
}

impl Default for DxConfig {
    fn default() -> Self {
        Self { channels: 3, base_width: 64, max_width: 512, layers: 10 }
    }
}

impl DxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 || self.layers % 2 != 0 {
            return Err(Error::InvalidArgument("HR discriminator needs an even number of layers >= 2".into()));
        }
        Ok(())
    }

    /// Channel widths: `w, w, 2w, 2w, 4w, 4w, …` capped at `max_width`.
    pub fn widths(&self) -> Vec<usize> {
        (0..self.layers)
            .map(|i| (self.base_width << (i / 2)).min(self.max_width))
            .collect()
    }

    /// Smallest input side that survives all stride-2 layers.
    pub fn min_input(&self) -> usize {
        1 << (self.layers / 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyConfig {
    pub channels: usize,
    pub widths: Vec<usize>,
    pub kernel: usize,
}

impl Default for DyConfig {
    fn default() -> Self {
        Self { channels: 3, widths: vec![64, 128, 256], kernel: 5 }
    }
}

impl DyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.kernel % 2 == 0 {
            return Err(Error::InvalidArgument("LR discriminator needs widths and an odd kernel".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub gsr: GsrConfig,
    pub glr: GlrConfig,
    pub dx: DxConfig,
    pub dy: DyConfig,
}

impl ModelConfig {
    /// Full-size networks.
    pub fn full() -> Self {
        Self { gsr: GsrConfig::default(), glr: GlrConfig::default(), dx: DxConfig::default(), dy: DyConfig::default() }
    }

    /// Small networks for CPU tests and smoke training.
    pub fn tiny() -> Self {
        Self {
            gsr: GsrConfig { feat_maps: 16, resblocks: 2, ..GsrConfig::default() },
            glr: GlrConfig { feat_maps: 16, resblocks: 2, ..GlrConfig::default() },
            dx: DxConfig { base_width: 8, max_width: 64, ..DxConfig::default() },
            dy: DyConfig { widths: vec![16, 32, 64], ..DyConfig::default() },
        }
    }

    pub fn scale(&self) -> usize {
        self.gsr.scale
    }

    pub fn validate(&self) -> Result<()> {
        self.gsr.validate()?;
        self.glr.validate()?;
        self.dx.validate()?;
        self.dy.validate()?;
        if self.gsr.scale != self.glr.scale {
            return Err(Error::InvalidArgument("generator scales differ".into()));
        }
        let c = self.gsr.channels;
        if [self.glr.channels, self.dx.channels, self.dy.channels].iter().any(|&x| x != c) {
            return Err(Error::InvalidArgument("networks disagree on channel count".into()));
        }
        Ok(())
    }
}

/// All four networks with a shared configuration.
#[derive(Debug, Clone)]
pub struct ModelSet {
    pub config: ModelConfig,
    pub gsr: SrGenerator,
    pub glr: LrGenerator,
    pub dx: HrDiscriminator,
    pub dy: LrDiscriminator,
}

pub const NETWORK_NAMES: [&str; 4] = ["gsr", "glr", "dx", "dy"];

impl ModelSet {
    /// Networks are initialized from `seed`, `seed+1`, `seed+2`, `seed+3`.
    pub fn new(config: ModelConfig, dtype: DType, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            gsr: SrGenerator::new(config.gsr.clone(), dtype, seed)?,
            glr: LrGenerator::new(config.glr.clone(), dtype, seed.wrapping_add(1))?,
            dx: HrDiscriminator::new(config.dx.clone(), dtype, seed.wrapping_add(2))?,
            dy: LrDiscriminator::new(config.dy.clone(), dtype, seed.wrapping_add(3))?,
            config,
        })
    }

    pub fn network(&self, name: &str) -> Option<&dyn Network> {
        match name {
            "gsr" => Some(&self.gsr),
            "glr" => Some(&self.glr),
            "dx" => Some(&self.dx),
            "dy" => Some(&self.dy),
            _ => None,
        }
    }

    pub fn stores(&self) -> [(&'static str, &ParamStore); 4] {
        [("gsr", self.gsr.store()), ("glr", self.glr.store()), ("dx", self.dx.store()), ("dy", self.dy.store())]
    }

    pub fn fingerprints(&self) -> Result<[(&'static str, u64); 4]> {
        let s = self.stores();
        Ok([
            (s[0].0, s[0].1.fingerprint()?),
            (s[1].0, s[1].1.fingerprint()?),
            (s[2].0, s[2].1.fingerprint()?),
            (s[3].0, s[3].1.fingerprint()?),
        ])
    }

    /// Header carries `{"format": "srrescycgan", "model": <config>}` merged with `extra`.
    pub fn to_checkpoint(&self, extra: serde_json::Value) -> Result<Checkpoint> {
        let mut header = serde_json::json!({
            "format": "srrescycgan",
            "model": serde_json::to_value(&self.config).map_err(|e| Error::Checkpoint(e.to_string()))?,
        });
        if let (Some(h), serde_json::Value::Object(extra)) = (header.as_object_mut(), extra) {
            h.extend(extra);
        }
        let mut ck = Checkpoint::new(header);
        for (name, store) in self.stores() {
            ck.insert_prefixed(&format!("{name}."), store.named_tensors());
        }
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint, dtype: DType) -> Result<Self> {
        let config = model_config_of(ck)?;
        let set = Self::new(config, dtype, 0)?;
        for (name, store) in set.stores() {
            store.load_named(&ck.prefixed(&format!("{name}.")))?;
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint(serde_json::json!({}))?.save(path)
    }

    pub fn load(path: impl AsRef<Path>, dtype: DType) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?, dtype)
    }
}

pub fn model_config_of(ck: &Checkpoint) -> Result<ModelConfig> {
    if ck.header.get("format").and_then(|v| v.as_str()) != Some("srrescycgan") {
        return Err(Error::Checkpoint("header is missing format \"srrescycgan\"".into()));
    }
    let model = ck
        .header
        .get("model")
        .ok_or_else(|| Error::Checkpoint("header has no model config".into()))?;
    serde_json::from_value(model.clone()).map_err(|e| Error::Checkpoint(format!("model config: {e}")))
}

/// Loads only the SR generator from a checkpoint.
pub fn load_sr_generator(path: impl AsRef<Path>, dtype: DType) -> Result<SrGenerator> {
    let ck = Checkpoint::load(path)?;
    let config = model_config_of(&ck)?;
    let gsr = SrGenerator::new(config.gsr, dtype, 0)?;
    gsr.store().load_named(&ck.prefixed("gsr."))?;
    Ok(gsr)
}
