use candle_core::{Device, Tensor};

use crate::degradation::resize_matrix;
use crate::error::Result;

/// Differentiable separable bicubic resize of an `N×C×H×W` tensor; uses the
/// same weights as the image-domain resampler.
pub fn bicubic_resize(x: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (_, _, h, w) = x.dims4()?;
    if (h, w) == (out_h, out_w) {
        return Ok(x.clone());
    }
    let rows = Tensor::from_vec(resize_matrix(h, out_h), (out_h, h), &Device::Cpu)?.to_dtype(x.dtype())?;
    let cols = Tensor::from_vec(resize_matrix(w, out_w), (out_w, w), &Device::Cpu)?
        .to_dtype(x.dtype())?
        .t()?
        .contiguous()?;
    let y = x.broadcast_matmul(&cols)?;
    Ok(rows.broadcast_matmul(&y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::bicubic_upsample;
    use crate::imaging::Image;
    use candle_core::DType;

    #[test]
    fn matches_image_resampler() {
        let img = Image::from_fn(3, 5, 7, |c, y, x| ((c * 13 + y * 7 + x * 3) % 11) as f32 / 11.0).unwrap();
        let expect = bicubic_upsample(&img, 4).unwrap();
        let t = img.to_tensor(DType::F64).unwrap().unsqueeze(0).unwrap();
        let got = Image::from_tensor(&bicubic_resize(&t, 20, 28).unwrap()).unwrap();
        for (a, b) in got.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
