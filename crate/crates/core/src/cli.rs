//! Command-line front end: `degrade`, `train`, `infer`, `evaluate`, `ablate`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::degradation::{degrade_dir, list_pngs, DegradationSpec, JpegQuality, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::imaging::{load_image, save_image};
use crate::inference::SuperResolver;
use crate::losses::LossPreset;
use crate::metrics::evaluate_dir;
use crate::training::{run_ablation, train, ModelPreset, PairedDataset, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "srrescycgan", version, about = "Cyclic GAN residual super-resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bicubic-downsample, add noise and optionally JPEG-compress every HR PNG.
    Degrade(DegradeArgs),
    /// Train the four networks and write checkpoints plus losses.csv.
    Train(TrainArgs),
    /// Super-resolve one PNG or every PNG in a directory.
    Infer(InferArgs),
    /// PSNR/SSIM of same-named PNGs in two directories.
    Evaluate(EvaluateArgs),
    /// Train with and without the cycle branch and compare.
    Ablate(TrainArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub hr_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub scale: usize,
    /// Noise standard deviation in 8-bit units.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// JPEG quality 1..=100 or `off`.
    #[arg(long = "jpeg-q", default_value = "off")]
    pub jpeg_q: JpegQuality,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML file with TrainConfig fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Manifest written by `degrade`.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub manifest: Option<PathBuf>,
    /// Train on this many generated 96x96 images (sigma 8) instead of a manifest.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Validation manifest; defaults to the training pairs.
    #[arg(long)]
    pub val_manifest: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub preset: Option<LossPreset>,
    #[arg(long)]
    pub no_cycle: bool,
    #[arg(long)]
    pub iters: Option<u64>,
    /// Desk-scale settings: small networks, batch 4, 16x16 LR patches.
    #[arg(long)]
    pub tiny: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// A PNG file or a directory of PNGs.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output PNG for a file input, output directory for a directory input.
    #[arg(long)]
    pub out: PathBuf,
    /// Average over the 8 flips/rotations.
    #[arg(long)]
    pub ensemble: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub sr_dir: PathBuf,
    #[arg(long)]
    pub hr_dir: PathBuf,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `std::env::args` and runs the command. Errors go to stderr.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, &mut io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<ExitCode> {
    match cli.command {
        Command::Degrade(a) => degrade_cmd(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Infer(a) => infer_cmd(a, out),
        Command::Evaluate(a) => evaluate_cmd(a, out),
        Command::Ablate(a) => ablate_cmd(a, out),
    }
}

fn degrade_cmd(a: DegradeArgs, out: &mut dyn Write) -> Result<ExitCode> {
    let spec = DegradationSpec { scale: a.scale, noise_sigma: a.sigma, jpeg_quality: a.jpeg_q, seed: a.seed };
    let rows = degrade_dir(&a.hr_dir, &a.out_dir, &spec)?;
    writeln!(out, "degraded {} image(s); manifest {}", rows.len(), a.out_dir.join(MANIFEST_FILE).display())?;
    Ok(ExitCode::SUCCESS)
}

/// File config (or defaults) with command-line overrides applied.
pub fn resolve_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut c = match &a.config {
        Some(p) => TrainConfig::load(p)?,
        None if a.tiny => TrainConfig::desk(),
        None => TrainConfig::default(),
    };
    if a.tiny {
        let desk = TrainConfig::desk();
        c.model = ModelPreset::Tiny;
        c.batch_size = desk.batch_size;
        c.lr_patch = desk.lr_patch;
    }
    if let Some(p) = a.preset {
        c.loss_preset = p;
    }
    if a.no_cycle {
        c.cyclic_path = false;
    }
    if let Some(n) = a.iters {
        c.total_iters = n;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn datasets(a: &TrainArgs, scale: usize) -> Result<(PairedDataset, Option<PairedDataset>)> {
    let data = match (&a.manifest, a.synthetic) {
        (Some(m), _) => PairedDataset::from_manifest(m)?,
        (None, Some(n)) => {
            let spec = DegradationSpec { scale, noise_sigma: 8.0, jpeg_quality: JpegQuality::Off, seed: 100 };
            PairedDataset::synthetic(n, 96, &spec, 0)?
        }
        (None, None) => return Err(Error::InvalidArgument("either --manifest or --synthetic is required".into())),
    };
    let val = a.val_manifest.as_deref().map(PairedDataset::from_manifest).transpose()?;
    Ok((data, val))
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<ExitCode> {
    let config = resolve_config(&a)?;
    let (data, val) = datasets(&a, config.model_config().scale())?;
    let outcome = train(config, &data, Some(val.as_ref().unwrap_or(&data)), &a.out_dir, out)?;
    writeln!(out, "checkpoint {}", outcome.checkpoint.display())?;
    Ok(ExitCode::SUCCESS)
}

fn ablate_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<ExitCode> {
    let config = resolve_config(&a)?;
    let (data, val) = datasets(&a, config.model_config().scale())?;
    let report = run_ablation(&config, &data, val.as_ref(), &a.out_dir, out)?;
    report.write_csv(fs::File::create(a.out_dir.join("ablation.csv"))?)?;
    writeln!(out, "{report}")?;
    Ok(ExitCode::SUCCESS)
}

fn infer_cmd(a: InferArgs, out: &mut dyn Write) -> Result<ExitCode> {
    let model = SuperResolver::load(&a.checkpoint)?;
    let run_one = |src: &Path, dst: &Path| -> Result<()> {
        let lr = load_image(src)?;
        let sr = if a.ensemble { model.super_resolve_ensemble(&lr)? } else { model.super_resolve(&lr)? };
        save_image(&sr, dst)
    };
    if !a.input.is_dir() {
        if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        run_one(&a.input, &a.out)?;
        writeln!(out, "wrote {}", a.out.display())?;
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&a.out)?;
    let inputs = list_pngs(&a.input)?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut failed = 0;
    for src in &inputs {
        let dst = a.out.join(src.file_name().unwrap_or_default());
        match run_one(src, &dst) {
            Ok(()) => writeln!(out, "wrote {}", dst.display())?,
            Err(e) => {
                failed += 1;
                eprintln!("error: {}: {e}", src.display());
            }
        }
    }
    writeln!(out, "{} of {} image(s) super-resolved", inputs.len() - failed, inputs.len())?;
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn evaluate_cmd(a: EvaluateArgs, out: &mut dyn Write) -> Result<ExitCode> {
    let report = evaluate_dir(&a.sr_dir, &a.hr_dir, None)?;
    if let Some(p) = &a.csv {
        report.write_csv(fs::File::create(p)?)?;
    }
    writeln!(out, "{report}")?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "seed = 3\ntotal_iters = 50\nloss_preset = \"structural\"\n").unwrap();
        let cli = Cli::try_parse_from([
            "srrescycgan", "train", "--config", p.to_str().unwrap(), "--synthetic", "2", "--out-dir", "o",
            "--preset", "perceptual", "--iters", "7", "--no-cycle",
        ])
        .unwrap();
        let Command::Train(a) = cli.command else { panic!("not train") };
        let c = resolve_config(&a).unwrap();
        assert_eq!((c.seed, c.total_iters, c.loss_preset, c.cyclic_path), (3, 7, LossPreset::Perceptual, false));
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(Cli::try_parse_from(["srrescycgan", "evaluate", "--sr-dir", "a", "--hr-dir", "b", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["srrescycgan", "train", "--out-dir", "o"]).is_err());
    }
}
