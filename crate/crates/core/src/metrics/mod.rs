//! PSNR, SSIM and MS-SSIM on RGB (no luma conversion), plus directory evaluation.

mod report;
pub mod ssim;

pub use report::{evaluate_dir, evaluate_pairs, MetricReport, MetricRow, PerceptualMetric};

use candle_core::DType;

use crate::error::Result;
use crate::imaging::Image;

/// `10·log10(1/MSE)` over all channels and pixels; `+∞` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
}

fn as_batch(img: &Image) -> Result<candle_core::Tensor> {
    Ok(img.to_tensor(DType::F64)?.unsqueeze(0)?)
}

pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    if a == b {
        return Ok(1.0);
    }
    Ok(ssim::ssim_tensor(&as_batch(a)?, &as_batch(b)?)?.to_scalar::<f64>()?)
}

pub fn ms_ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    if a == b {
        return Ok(1.0);
    }
    Ok(ssim::ms_ssim_tensor(&as_batch(a)?, &as_batch(b)?)?.to_scalar::<f64>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(seed: u32) -> Image {
        Image::from_fn(3, 24, 20, |c, y, x| {
            let v = ((c as u32 * 31 + y as u32 * 17 + x as u32 * 7 + seed * 13) % 97) as f32 / 97.0;
            v * 0.9 + 0.05
        })
        .unwrap()
    }

    #[test]
    fn psnr_identity_and_symmetry() {
        let a = img(1);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = img(2);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn psnr_one_level_offset() {
        let a = Image::filled(3, 8, 8, 0.5).unwrap();
        let b = a.map(|v| v + 1.0 / 255.0).unwrap();
        let got = psnr(&a, &b).unwrap();
        assert!((got - 20.0 * 255f64.log10()).abs() < 1e-4, "{got}");
    }

    #[test]
    fn ssim_identity_and_inversion() {
        let a = img(3);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let binary = Image::from_fn(1, 16, 16, |_, y, x| ((x / 2 + y / 3) % 2) as f32).unwrap();
        let inv = binary.map(|v| 1.0 - v).unwrap();
        assert!(ssim(&binary, &inv).unwrap() < 0.0);
    }

    #[test]
    fn ssim_symmetric_and_bounded() {
        let (a, b) = (img(4), img(9));
        let s = ssim(&a, &b).unwrap();
        assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&s));
        let m = ms_ssim(&a, &b).unwrap();
        assert!((0.0..=1.0).contains(&m));
        assert!(ssim(&a, &Image::filled(3, 24, 21, 0.0).unwrap()).is_err());
    }
}
