//! Residual cyclic-GAN single-image super-resolution.
//!
//! The crate bundles the synthetic degradation model, the four networks
//! (SR generator with a learned ℓ2-ball projection layer, HR discriminator,
//! LR generator, patch LR discriminator), every training objective, the image
//! quality metrics, the alternating training loop with its ablation harness,
//! and self-ensemble inference.

pub mod cli;
pub mod degradation;
pub mod error;
pub mod imaging;
pub mod inference;
pub mod losses;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod training;

pub use error::{Error, Result};
pub use imaging::Image;
pub use inference::SuperResolver;
