//! Alternating adversarial optimization, noise estimation, checkpoints and
//! the cycle-branch ablation.

mod ablation;
mod adam;
mod config;
mod data;
mod noise;
mod schedule;
mod trainer;

pub use ablation::{run_ablation, AblationReport, AblationRow, STRUCTURE_CYCLE, STRUCTURE_NO_CYCLE};
pub use adam::{Adam, AdamConfig};
pub use config::{ModelPreset, TrainConfig};
pub use data::{synthetic_hr, Batch, Pair, PairedDataset};
pub use noise::{estimate_noise_sigma, MAX_SIGMA};
pub use schedule::learning_rate;
pub use trainer::{mean_psnr, train, BestSnapshot, Generated, StepReport, TrainOutcome, TrainState, Trainer, LOSS_CSV_HEADER};
