use candle_core::Tensor;

use crate::error::Result;
use crate::metrics::ssim::{ms_ssim_tensor, ssim_tensor};

/// `1 − SSIM(sr, hr)`, in `[0, 2]`.
pub fn ssim_loss(sr: &Tensor, hr: &Tensor) -> Result<Tensor> {
    Ok(ssim_tensor(sr, hr)?.neg()?.affine(1.0, 1.0)?)
}

/// `1 − MS-SSIM(sr, hr)`, in `[0, 1]`.
pub fn msssim_loss(sr: &Tensor, hr: &Tensor) -> Result<Tensor> {
    Ok(ms_ssim_tensor(sr, hr)?.neg()?.affine(1.0, 1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{DType, Device};

    #[test]
    fn identical_inputs_give_zero() {
        let x = Tensor::rand(0f64, 1f64, (2, 3, 24, 24), &Device::Cpu).unwrap();
        assert!(ssim_loss(&x, &x).unwrap().to_scalar::<f64>().unwrap().abs() < 1e-12);
        assert!(msssim_loss(&x, &x).unwrap().to_scalar::<f64>().unwrap().abs() < 1e-12);
    }

    #[test]
    fn bounded() {
        let a = Tensor::rand(0f32, 1f32, (1, 1, 16, 16), &Device::Cpu).unwrap().to_dtype(DType::F64).unwrap();
        let b = (a.neg().unwrap() + 1.0).unwrap();
        let l = ssim_loss(&a, &b).unwrap().to_scalar::<f64>().unwrap();
        assert!(l > 1.0 && l <= 2.0);
        let m = msssim_loss(&a, &b).unwrap().to_scalar::<f64>().unwrap();
        assert!((0.0..=1.0).contains(&m));
    }
}
