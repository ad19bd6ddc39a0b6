use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::TrainConfig;
use super::data::PairedDataset;
use super::trainer::Trainer;
use crate::error::Result;
use crate::inference::SuperResolver;
use crate::metrics::{evaluate_pairs, MetricReport};
use crate::models::{count_parameters, NETWORK_NAMES};

pub const STRUCTURE_NO_CYCLE: &str = "y→G_SR→ŷ";
pub const STRUCTURE_CYCLE: &str = "y→G_SR→ŷ→G_LR→y′";
/// Full-scale improvement of the cyclic variant, kept for context only.
pub const REFERENCE_DELTA_PSNR: f64 = 1.34;
pub const REFERENCE_DELTA_SSIM: f64 = 0.06;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub cyclic_path: bool,
    pub structure: String,
    pub psnr: f64,
    pub ssim: f64,
    /// Trainable parameters of G_SR, the only network used at inference.
    pub sr_params: usize,
    /// Trainable parameters across every network that was optimized.
    pub trained_params: usize,
    /// Networks whose parameter hash changed during training.
    pub networks_optimized: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub iterations: u64,
    pub seed: u64,
}

impl AblationReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["variant", "cyclic_path", "structure", "psnr", "ssim", "sr_params", "trained_params", "networks_optimized"])?;
        for r in &self.rows {
            csv.write_record([
                r.variant.clone(),
                r.cyclic_path.to_string(),
                r.structure.clone(),
                format!("{:.4}", r.psnr),
                format!("{:.4}", r.ssim),
                r.sr_params.to_string(),
                r.trained_params.to_string(),
                r.networks_optimized.join(" "),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

impl fmt::Display for AblationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<9} {:<5} {:<20} {:>8} {:>7} {:>9} {:>9}  optimized", "variant", "cycle", "structure", "PSNR", "SSIM", "G_SR", "trained")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<9} {:<5} {:<20} {:>8.3} {:>7.4} {:>9} {:>9}  {}",
                r.variant,
                if r.cyclic_path { "yes" } else { "no" },
                r.structure,
                r.psnr,
                r.ssim,
                r.sr_params,
                r.trained_params,
                r.networks_optimized.join(",")
            )?;
        }
        write!(
            f,
            "{} iterations, seed {}; full-scale reference gain of the cycle: +{REFERENCE_DELTA_PSNR} dB / +{REFERENCE_DELTA_SSIM} SSIM",
            self.iterations, self.seed
        )
    }
}

/// Trains the no-cycle and cycle variants with identical seeds and budget,
/// then scores both on `val` (or the training pairs).
pub fn run_ablation(
    config: &TrainConfig,
    data: &PairedDataset,
    val: Option<&PairedDataset>,
    out_dir: &Path,
    log: &mut dyn Write,
) -> Result<AblationReport> {
    let val = val.unwrap_or(data);
    let mut rows = Vec::with_capacity(2);
    for (variant, cyclic, structure) in [("no-cycle", false, STRUCTURE_NO_CYCLE), ("cycle", true, STRUCTURE_CYCLE)] {
        writeln!(log, "ablation variant {variant}")?;
        let mut trainer = Trainer::new(TrainConfig { cyclic_path: cyclic, ..config.clone() })?;
        let before = trainer.models().fingerprints()?;
        trainer.run(data, Some(val), &out_dir.join(variant), log)?;
        let after = trainer.models().fingerprints()?;
        let networks_optimized: Vec<String> = before
            .iter()
            .zip(after.iter())
            .filter(|((_, a), (_, b))| a != b)
            .map(|((n, _), _)| n.to_string())
            .collect();
        let models = trainer.models();
        let trained_params = NETWORK_NAMES
            .iter()
            .filter(|n| networks_optimized.iter().any(|m| m == *n))
            .filter_map(|n| models.network(n))
            .map(count_parameters)
            .sum();
        let report = score(&SuperResolver::new(models.gsr.clone()), val)?;
        rows.push(AblationRow {
            variant: variant.into(),
            cyclic_path: cyclic,
            structure: structure.into(),
            psnr: report.mean_psnr.unwrap_or(f64::INFINITY),
            ssim: report.mean_ssim,
            sr_params: count_parameters(&models.gsr),
            trained_params,
            networks_optimized,
        });
    }
    Ok(AblationReport { rows, iterations: config.total_iters, seed: config.seed })
}

fn score(model: &SuperResolver, val: &PairedDataset) -> Result<MetricReport> {
    let pairs = val
        .pairs()
        .iter()
        .map(|p| Ok((p.name.clone(), model.super_resolve(&p.lr)?, p.hr.clone())))
        .collect::<Result<Vec<_>>>()?;
    evaluate_pairs(&pairs, None)
}
