use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::adam::Adam;
use super::config::TrainConfig;
use super::data::{Batch, PairedDataset};
use super::noise::estimate_noise_sigma;
use crate::error::{Error, Result};
use crate::imaging::tensor_to_batch;
use crate::inference::SuperResolver;
use crate::losses::{
    composite_generator_loss, feature_extractor, ragan_discriminator_loss, CycleInputs, FeatureExtractor,
    GeneratorLossInputs, LossBreakdown, LossWeights,
};
use crate::metrics::psnr;
use crate::models::{model_config_of, ModelSet, Network};
use crate::nn::{Checkpoint, Mode, ParamStore};

pub const LOSS_CSV_HEADER: [&str; 9] = ["iter", "l_per", "l_gan", "l_tv", "l_l1", "l_cyc", "l_ssim", "l_msssim", "total"];
const TRAIN_DTYPE: DType = DType::F32;
const RNG_STREAM: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestSnapshot {
    pub iteration: u64,
    pub psnr: f64,
}

/// Everything besides the weights needed to continue a run exactly.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub iteration: u64,
    pub current_lr: f64,
    /// One optimizer per optimized network, keyed by network name.
    pub optimizers: BTreeMap<String, Adam>,
    pub rng: ChaCha8Rng,
    pub best: Option<BestSnapshot>,
}

/// Outcome of one alternating iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Iteration index of the step just taken (0-based).
    pub iteration: u64,
    pub lr: f64,
    pub generator: LossBreakdown,
    pub d_hr: f64,
    pub d_lr: Option<f64>,
}

pub struct Trainer {
    config: TrainConfig,
    models: ModelSet,
    weights: LossWeights,
    phi: Box<dyn FeatureExtractor>,
    state: TrainState,
}

impl Trainer {
    /// Fresh networks initialized from `config.seed`.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let models = ModelSet::new(config.model_config(), TRAIN_DTYPE, config.seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(RNG_STREAM);
        Self::assemble(config, models, rng)
    }

    fn assemble(config: TrainConfig, models: ModelSet, rng: ChaCha8Rng) -> Result<Self> {
        let phi = feature_extractor(&config.feature_source(), models.config.gsr.channels)?;
        let optimizers = Self::optimized_names(config.cyclic_path)
            .iter()
            .map(|n| (n.to_string(), Adam::new(config.adam)))
            .collect();
        let state = TrainState { iteration: 0, current_lr: config.lr_at(0), optimizers, rng, best: None };
        Ok(Self { weights: LossWeights::preset(config.loss_preset), config, models, phi, state })
    }

    /// Networks that receive updates: all four with the cycle branch, otherwise G_SR and D_x.
    pub fn optimized_names(cyclic_path: bool) -> &'static [&'static str] {
        if cyclic_path {
            &["gsr", "glr", "dx", "dy"]
        } else {
            &["gsr", "dx"]
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn models(&self) -> &ModelSet {
        &self.models
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }

    /// Replaces the preset weights, e.g. for ablations of individual terms.
    pub fn set_weights(&mut self, weights: LossWeights) -> Result<()> {
        weights.validate()?;
        self.weights = weights;
        Ok(())
    }

    pub fn sample_batch(&mut self, data: &PairedDataset) -> Result<Batch> {
        self.check_data(data)?;
        data.sample_batch(&mut self.state.rng, self.config.batch_size, self.config.lr_patch, TRAIN_DTYPE)
    }

    fn check_data(&self, data: &PairedDataset) -> Result<()> {
        let m = &self.models.config;
        if data.scale() != m.scale() || data.channels() != m.gsr.channels {
            return Err(Error::InvalidArgument(format!(
                "dataset is x{} with {} channels, model is x{} with {}",
                data.scale(),
                data.channels(),
                m.scale(),
                m.gsr.channels
            )));
        }
        Ok(())
    }

    fn optimize(&mut self, name: &str, loss: &Tensor, lr: f64) -> Result<()> {
        let grads = loss.backward()?;
        let store: &ParamStore = match name {
            "gsr" => self.models.gsr.store(),
            "glr" => self.models.glr.store(),
            "dx" => self.models.dx.store(),
            _ => self.models.dy.store(),
        };
        let opt = self.state.optimizers.get_mut(name).ok_or_else(|| Error::InvalidArgument(format!("{name} is not optimized")))?;
        opt.step(store, &grads, lr)
    }

    /// Runs the generators on a batch, keeping the graph for the generator update.
    pub fn generate(&self, batch: &Batch) -> Result<Generated> {
        let scale = self.models.config.scale();
        let (n, c, h, w) = batch.lr.dims4()?;
        if batch.hr.dims4()? != (n, c, h * scale, w * scale) {
            return Err(Error::Shape(format!("batch hr {:?} vs lr {:?} at x{scale}", batch.hr.dims(), batch.lr.dims())));
        }
        let sigma: Vec<f64> = tensor_to_batch(&batch.lr)?.iter().map(estimate_noise_sigma).collect();
        let sr = self.models.gsr.forward(&batch.lr, &sigma)?;
        let lr_rec = if self.config.cyclic_path { Some(self.models.glr.forward(&sr)?) } else { None };
        Ok(Generated { sigma, sr, lr_rec })
    }

    /// Mirror RaGAN update of D_x (and D_y with the cycle branch) on detached
    /// generator outputs. Returns the two discriminator losses.
    pub fn discriminator_update(&mut self, batch: &Batch, g: &Generated) -> Result<(f64, Option<f64>)> {
        // With the adversarial term switched off the discriminators have nothing to learn.
        if self.weights.w_gan == 0.0 {
            return Ok((0.0, None));
        }
        let lr = self.config.lr_at(self.state.iteration);
        let models = &self.models;
        let real = models.dx.forward(&batch.hr, Mode::Train)?;
        let fake = models.dx.forward(&g.sr.detach(), Mode::Train)?;
        let loss_x = ragan_discriminator_loss(&real, &fake)?;
        let d_hr = scalar(&loss_x)?;
        let loss_y = match &g.lr_rec {
            Some(rec) => {
                let real = models.dy.forward(&batch.lr, Mode::Train)?;
                let fake = models.dy.forward(&rec.detach(), Mode::Train)?;
                Some(ragan_discriminator_loss(&real, &fake)?)
            }
            None => None,
        };
        let d_lr = loss_y.as_ref().map(scalar).transpose()?;
        if !d_hr.is_finite() || d_lr.is_some_and(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss {
                iteration: self.state.iteration,
                breakdown: format!("discriminator d_hr={d_hr} d_lr={d_lr:?}"),
            });
        }
        self.optimize("dx", &loss_x, lr)?;
        if let Some(l) = loss_y {
            self.optimize("dy", &l, lr)?;
        }
        Ok((d_hr, d_lr))
    }

    /// Composite-loss update of G_SR (and G_LR with the cycle branch).
    pub fn generator_update(&mut self, batch: &Batch, g: &Generated) -> Result<LossBreakdown> {
        let lr = self.config.lr_at(self.state.iteration);
        let models = &self.models;
        let dx_real = models.dx.forward(&batch.hr, Mode::Train)?.detach();
        let dx_fake = models.dx.forward(&g.sr, Mode::Train)?;
        let cycle_logits = match &g.lr_rec {
            Some(rec) => Some((models.dy.forward(&batch.lr, Mode::Train)?.detach(), models.dy.forward(rec, Mode::Train)?)),
            None => None,
        };
        let cycle = match (&g.lr_rec, &cycle_logits) {
            (Some(rec), Some((real, fake))) => Some(CycleInputs { lr: &batch.lr, lr_rec: rec, dy_real: real, dy_fake: fake }),
            _ => None,
        };
        let inputs = GeneratorLossInputs { sr: &g.sr, hr: &batch.hr, dx_real: &dx_real, dx_fake: &dx_fake, cycle };
        let (total, breakdown) = composite_generator_loss(&inputs, &self.weights, self.phi.as_ref())?;
        if !breakdown.terms.all_finite() || !breakdown.total.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: self.state.iteration, breakdown: breakdown.to_string() });
        }
        // Both generators share one graph; take gradients once and step each.
        let grads = total.backward()?;
        for name in ["gsr", "glr"] {
            if let Some(opt) = self.state.optimizers.get_mut(name) {
                let store = if name == "gsr" { self.models.gsr.store() } else { self.models.glr.store() };
                opt.step(store, &grads, lr)?;
            }
        }
        Ok(breakdown)
    }

    /// One alternating iteration: discriminators first, then generators.
    pub fn train_step(&mut self, batch: &Batch) -> Result<StepReport> {
        let iteration = self.state.iteration;
        let lr = self.config.lr_at(iteration);
        self.state.current_lr = lr;
        let g = self.generate(batch)?;
        let (d_hr, d_lr) = self.discriminator_update(batch, &g)?;
        let generator = self.generator_update(batch, &g)?;
        self.state.iteration += 1;
        Ok(StepReport { iteration, lr, generator, d_hr, d_lr })
    }

    /// Mean PSNR of whole-image SR outputs against their HR images.
    pub fn validate(&self, data: &PairedDataset) -> Result<f64> {
        mean_psnr(&SuperResolver::new(self.models.gsr.clone()), data)
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let s = &self.state;
        let rng = json!({
            "seed": hex(&s.rng.get_seed()),
            "stream": s.rng.get_stream(),
            "word_pos": s.rng.get_word_pos().to_string(),
        });
        let steps: BTreeMap<&String, u64> = s.optimizers.iter().map(|(k, o)| (k, o.steps())).collect();
        let config = serde_json::to_value(&self.config).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut ck = self.models.to_checkpoint(json!({
            "train": {
                "iteration": s.iteration,
                "current_lr": s.current_lr,
                "config": config,
                "rng": rng,
                "adam_steps": steps,
                "best": s.best,
            }
        }))?;
        for (name, opt) in &s.optimizers {
            ck.insert_prefixed(&format!("adam.{name}."), opt.state_tensors());
        }
        Ok(ck)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint()?.save(path)
    }

    /// Restores weights, optimizer moments, RNG and counters from a training checkpoint.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(format!("training state: {m}"));
        let train = ck.header.get("train").ok_or_else(|| bad("missing"))?;
        let config: TrainConfig =
            serde_json::from_value(train.get("config").cloned().ok_or_else(|| bad("no config"))?).map_err(|e| bad(&e.to_string()))?;
        if model_config_of(ck)? != config.model_config() {
            return Err(bad("model config does not match the training preset"));
        }
        let models = ModelSet::from_checkpoint(ck, TRAIN_DTYPE)?;
        let rng_v = train.get("rng").ok_or_else(|| bad("no rng"))?;
        let seed = unhex(rng_v.get("seed").and_then(|v| v.as_str()).ok_or_else(|| bad("rng seed"))?).ok_or_else(|| bad("rng seed"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(rng_v.get("stream").and_then(|v| v.as_u64()).ok_or_else(|| bad("rng stream"))?);
        rng.set_word_pos(
            rng_v.get("word_pos").and_then(|v| v.as_str()).and_then(|s| s.parse().ok()).ok_or_else(|| bad("rng position"))?,
        );
        let mut t = Self::assemble(config, models, rng)?;
        let steps = train.get("adam_steps").and_then(|v| v.as_object()).ok_or_else(|| bad("adam steps"))?;
        for (name, opt) in t.state.optimizers.iter_mut() {
            let n = steps.get(name).and_then(|v| v.as_u64()).ok_or_else(|| bad("adam steps"))?;
            *opt = Adam::restore(t.config.adam, n, &ck.prefixed(&format!("adam.{name}.")));
        }
        t.state.iteration = train.get("iteration").and_then(|v| v.as_u64()).ok_or_else(|| bad("iteration"))?;
        t.state.current_lr = t.config.lr_at(t.state.iteration);
        t.state.best = serde_json::from_value(train.get("best").cloned().unwrap_or_default()).map_err(|e| bad(&e.to_string()))?;
        Ok(t)
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    /// Lets a resumed run go further than originally configured.
    pub fn set_total_iters(&mut self, total_iters: u64) {
        self.config.total_iters = total_iters;
    }

    /// Runs the remaining iterations, writing progress lines to `log`, the
    /// loss CSV and checkpoints to `out_dir`.
    pub fn run(&mut self, data: &PairedDataset, val: Option<&PairedDataset>, out_dir: &Path, log: &mut dyn Write) -> Result<TrainOutcome> {
        self.check_data(data)?;
        std::fs::create_dir_all(out_dir)?;
        let csv_path = out_dir.join("losses.csv");
        let resumed = self.state.iteration > 0 && csv_path.exists();
        let file = std::fs::OpenOptions::new().create(true).append(resumed).write(true).truncate(!resumed).open(&csv_path)?;
        let mut csv = csv::Writer::from_writer(BufWriter::new(file));
        if !resumed {
            csv.write_record(LOSS_CSV_HEADER)?;
        }
        let mut history = Vec::new();
        while self.state.iteration < self.config.total_iters {
            let batch = self.sample_batch(data)?;
            let report = self.train_step(&batch)?;
            history.push(report);
            let done = self.state.iteration;
            if done % self.config.log_every == 0 || done == self.config.total_iters {
                let t = &report.generator.terms;
                csv.write_record(
                    std::iter::once(done.to_string()).chain(
                        [t.l_per, t.l_gan, t.l_tv, t.l_l1, t.l_cyc, t.l_ssim, t.l_msssim, report.generator.total]
                            .iter()
                            .map(|v| v.to_string()),
                    ),
                )?;
                csv.flush()?;
                writeln!(log, "iter={done} lr={} total={}", report.lr, report.generator.total)?;
            }
            if self.config.is_checkpoint_iter(done) {
                self.save_checkpoint(out_dir.join(format!("checkpoint_{done:06}.ckpt")))?;
            }
        }
        csv.flush()?;
        let val_data = val.unwrap_or(data);
        let val_psnr = self.validate(val_data)?;
        if self.state.best.is_none_or(|b| val_psnr > b.psnr) {
            self.state.best = Some(BestSnapshot { iteration: self.state.iteration, psnr: val_psnr });
        }
        let checkpoint = out_dir.join("final.ckpt");
        self.save_checkpoint(&checkpoint)?;
        writeln!(log, "validation psnr={val_psnr}")?;
        Ok(TrainOutcome { checkpoint, loss_csv: csv_path, history, val_psnr })
    }
}

/// Generator outputs for one batch, still attached to the generator graph.
#[derive(Debug, Clone)]
pub struct Generated {
    /// Per-image noise estimates fed to the projection layer.
    pub sigma: Vec<f64>,
    pub sr: Tensor,
    pub lr_rec: Option<Tensor>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub loss_csv: PathBuf,
    pub history: Vec<StepReport>,
    pub val_psnr: f64,
}

/// Trains from scratch for `config.total_iters` iterations.
pub fn train(config: TrainConfig, data: &PairedDataset, val: Option<&PairedDataset>, out_dir: &Path, log: &mut dyn Write) -> Result<TrainOutcome> {
    Trainer::new(config)?.run(data, val, out_dir, log)
}

pub fn mean_psnr(model: &SuperResolver, data: &PairedDataset) -> Result<f64> {
    let mut acc = 0.0;
    for p in data.pairs() {
        acc += psnr(&model.super_resolve(&p.lr)?, &p.hr)?;
    }
    Ok(acc / data.len() as f64)
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    Some(out)
}
