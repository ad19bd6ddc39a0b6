use std::collections::BTreeMap;

use candle_core::{backprop::GradStore, Tensor};

use crate::error::Result;
use crate::nn::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam without weight decay over one [`ParamStore`]. Parameters that received
/// no gradient are left untouched.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    steps: u64,
    moments: BTreeMap<String, (Tensor, Tensor)>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, steps: 0, moments: BTreeMap::new() }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, store: &ParamStore, grads: &GradStore, lr: f64) -> Result<()> {
        self.steps += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let t = self.steps as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);
        for (name, var) in store.trainable() {
            let Some(g) = grads.get(var.as_tensor()) else { continue };
            // parameter gradients can still reference the forward graph
            let g = &g.detach();
            let (m, v) = match self.moments.get(name) {
                Some((m, v)) => (((m * beta1)? + (g * (1.0 - beta1))?)?, ((v * beta2)? + (g.sqr()? * (1.0 - beta2))?)?),
                None => ((g * (1.0 - beta1))?, (g.sqr()? * (1.0 - beta2))?),
            };
            let m_hat = (&m / correction1)?;
            let v_hat = (&v / correction2)?;
            let update = (m_hat / (v_hat.sqrt()? + eps)?)?;
            var.set(&var.as_tensor().sub(&(update * lr)?)?)?;
            self.moments.insert(name.clone(), (m, v));
        }
        Ok(())
    }

    /// Moment tensors keyed `{param}.m` / `{param}.v`.
    pub fn state_tensors(&self) -> BTreeMap<String, Tensor> {
        let mut out = BTreeMap::new();
        for (k, (m, v)) in &self.moments {
            out.insert(format!("{k}.m"), m.clone());
            out.insert(format!("{k}.v"), v.clone());
        }
        out
    }

    pub fn restore(config: AdamConfig, steps: u64, tensors: &BTreeMap<String, Tensor>) -> Self {
        let mut moments = BTreeMap::new();
        for (k, m) in tensors {
            if let Some(name) = k.strip_suffix(".m") {
                if let Some(v) = tensors.get(&format!("{name}.v")) {
                    moments.insert(name.to_string(), (m.clone(), v.clone()));
                }
            }
        }
        Self { config, steps, moments }
    }
}
