//! Differentiable SSIM / MS-SSIM on `N×C×H×W` tensors.
//!
//! Gaussian window 11×11 with σ = 1.5 (shrunk to the largest odd size that
//! fits smaller images), valid filtering, `C1 = 0.01²`, `C2 = 0.03²` at peak
//! 1.0. Statistics are computed per channel; the score is the mean over
//! channels and images.

use candle_core::{Device, Tensor};

use crate::error::{Error, Result};
use crate::nn::{conv2d, Padding};

pub const WINDOW: usize = 11;
pub const WINDOW_SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
// floor applied before fractional powers in MS-SSIM
const POW_FLOOR: f64 = 1e-6;

/// Normalized 1-D Gaussian taps of odd length `size`.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let w: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Window side used for an `h×w` image.
pub fn window_size(h: usize, w: usize) -> usize {
    let m = WINDOW.min(h).min(w);
    if m % 2 == 0 {
        m - 1
    } else {
        m
    }
}

fn blur(x: &Tensor, taps: &Tensor, size: usize) -> Result<Tensor> {
    let (n, c, h, w) = x.dims4()?;
    let flat = x.reshape((n * c, 1, h, w))?;
    let horiz = taps.reshape((1, 1, 1, size))?;
    let vert = taps.reshape((1, 1, size, 1))?;
    let y = conv2d(&conv2d(&flat, &horiz, Padding::Zero(0), 1)?, &vert, Padding::Zero(0), 1)?;
    let (_, _, oh, ow) = y.dims4()?;
    Ok(y.reshape((n, c, oh, ow))?)
}

/// Per-image, per-channel `(ssim, cs)` means, each `N×C`.
pub fn ssim_components(a: &Tensor, b: &Tensor) -> Result<(Tensor, Tensor)> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    let (_, _, h, w) = a.dims4()?;
    let size = window_size(h, w);
    let taps = Tensor::from_vec(gaussian_window(size, WINDOW_SIGMA), size, &Device::Cpu)?.to_dtype(a.dtype())?;
    let mu_a = blur(a, &taps, size)?;
    let mu_b = blur(b, &taps, size)?;
    let mu_aa = mu_a.sqr()?;
    let mu_bb = mu_b.sqr()?;
    let mu_ab = (&mu_a * &mu_b)?;
    let var_a = (blur(&a.sqr()?, &taps, size)? - &mu_aa)?;
    let var_b = (blur(&b.sqr()?, &taps, size)? - &mu_bb)?;
    let cov = (blur(&(a * b)?, &taps, size)? - &mu_ab)?;
    let cs_map = ((cov * 2.0)? + C2)?.div(&((var_a + var_b)? + C2)?)?;
    let lum_map = ((mu_ab * 2.0)? + C1)?.div(&((mu_aa + mu_bb)? + C1)?)?;
    let ssim_map = (lum_map * &cs_map)?;
    Ok((ssim_map.mean(3)?.mean(2)?, cs_map.mean(3)?.mean(2)?))
}

/// Mean SSIM as a 0-d tensor.
pub fn ssim_tensor(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (s, _) = ssim_components(a, b)?;
    Ok(s.mean_all()?)
}

/// Number of MS-SSIM scales for a `h×w` image: the largest `m ≤ 5` with
/// `min(h, w) ≥ 10·2^(m-1) + 1`, so every level is at least 11 px.
pub fn ms_ssim_scales(h: usize, w: usize) -> usize {
    let side = h.min(w);
    (1..=5).rev().find(|&m| side > 10 << (m - 1)).unwrap_or(1)
}

/// 2×2 average pooling; odd sides are first extended by repeating the last row/column.
fn halve(x: &Tensor) -> Result<Tensor> {
    let (_, _, h, w) = x.dims4()?;
    let x = if h % 2 == 1 { x.pad_with_same(2, 0, 1)? } else { x.clone() };
    let x = if w % 2 == 1 { x.pad_with_same(3, 0, 1)? } else { x };
    Ok(x.avg_pool2d(2)?)
}

/// MS-SSIM with the canonical five weights, renormalized when fewer scales fit.
pub fn ms_ssim_tensor(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    let (_, _, h, w) = a.dims4()?;
    let scales = ms_ssim_scales(h, w);
    let weights = &MS_SSIM_WEIGHTS[..scales];
    let total: f64 = weights.iter().sum();
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut product: Option<Tensor> = None;
    for (j, &wj) in weights.iter().enumerate() {
        let (s, cs) = ssim_components(&a, &b)?;
        let term = if j + 1 == scales { s } else { cs };
        let factor = term.maximum(POW_FLOOR)?.powf(wj / total)?;
        product = Some(match product {
            None => factor,
            Some(p) => (p * factor)?,
        });
        if j + 1 < scales {
            a = halve(&a)?;
            b = halve(&b)?;
        }
    }
    Ok(product.expect("at least one scale").mean_all()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_normalized_and_symmetric() {
        let w = gaussian_window(11, 1.5);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..11 {
            assert!((w[i] - w[10 - i]).abs() < 1e-18);
        }
    }

    #[test]
    fn scale_count_rule() {
        assert_eq!(ms_ssim_scales(161, 200), 5);
        assert_eq!(ms_ssim_scales(160, 200), 4);
        assert_eq!(ms_ssim_scales(64, 64), 3);
        assert_eq!(ms_ssim_scales(16, 16), 1);
        assert_eq!(ms_ssim_scales(21, 30), 2);
        assert_eq!(window_size(8, 20), 7);
    }
}
