//! Euclidean projection onto a noise-scaled ℓ2 ball.
//!
//! For an image with `N` elements and noise estimate `σ̂` (8-bit units) the
//! radius is `r = α · σ̂/255 · sqrt(N)`; the projection returns `z` when
//! `‖z‖ ≤ r` and `z · r/‖z‖` otherwise.

use candle_core::{Device, Tensor};

use crate::error::{Error, Result};

// keeps d‖z‖ finite at z = 0
const NORM_EPS: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionParams {
    pub alpha: f64,
    pub sigma_hat: f64,
}

impl ProjectionParams {
    pub fn radius(&self, elements: usize) -> f64 {
        self.alpha * self.sigma_hat / 255.0 * (elements as f64).sqrt()
    }
}

/// Per-sample radii `alpha · σ̂_i/255 · sqrt(N)` as an `[N]` tensor.
/// `alpha` is a scalar tensor so gradients reach it.
pub fn projection_radius(alpha: &Tensor, sigma_hat: &[f64], elements: usize) -> Result<Tensor> {
    if sigma_hat.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidArgument(format!("noise estimates must be >= 0: {sigma_hat:?}")));
    }
    let base: Vec<f64> = sigma_hat.iter().map(|s| s / 255.0 * (elements as f64).sqrt()).collect();
    let base = Tensor::from_vec(base, sigma_hat.len(), &Device::Cpu)?.to_dtype(alpha.dtype())?;
    Ok(base.broadcast_mul(alpha)?)
}

/// Projects each sample of `z` (`N×…`) onto the ball of radius `radius[i]`.
pub fn project_l2_ball(z: &Tensor, radius: &Tensor) -> Result<Tensor> {
    let n = z.dim(0)?;
    if radius.dims() != [n] {
        return Err(Error::Shape(format!("radius {:?} for batch of {n}", radius.dims())));
    }
    let flat = z.reshape((n, ()))?;
    let norm = (flat.sqr()?.sum(1)? + NORM_EPS)?.sqrt()?;
    // r / max(‖z‖, r): 1 inside the ball, r/‖z‖ outside, 0 when r = 0
    let denom = norm.maximum(radius)?.maximum(NORM_EPS.sqrt())?;
    let factor = radius.div(&denom)?;
    let mut shape = vec![n];
    shape.extend(std::iter::repeat_n(1, z.rank() - 1));
    Ok(z.broadcast_mul(&factor.reshape(shape)?)?)
}
