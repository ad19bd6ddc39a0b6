//! Image values, PNG I/O, flips/rotations and training patch sampling.
//!
//! Pixels are stored as `f32` in channel-major `C×H×W` order and are expected
//! to live in `[0, 1]`; intermediate results (bicubic overshoot, noise) may
//! leave that range until [`Image::clip`] is applied.

pub(crate) mod io;
mod patch;
mod transform;

pub use io::{load_image, save_image};
pub use patch::extract_patch_pair;
pub use transform::{apply_transform, GeomTransform};

use candle_core::{DType, Device, Tensor};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("channels must be 1 or 3, got {channels}")));
        }
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!("empty image {height}x{width}")));
        }
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "buffer of {} values does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite pixel at index {i}")));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(channels, height, width, vec![value; channels * height * width])
    }

    /// Builds an image by evaluating `f(c, y, x)` at every pixel.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.index(c, y, x)]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn clip(&self) -> Self {
        Self {
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..self.clone()
        }
    }

    pub fn is_in_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Crops a `height×width` window whose top-left corner is `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::Shape(format!(
                "crop {height}x{width}@({top},{left}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        Self::from_fn(self.channels, height, width, |c, y, x| {
            self.get(c, top + y, left + x)
        })
    }

    pub fn same_shape(&self, other: &Image) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// `C×H×W` tensor on the CPU.
    pub fn to_tensor(&self, dtype: DType) -> Result<Tensor> {
        let t = Tensor::from_slice(&self.data, (self.channels, self.height, self.width), &Device::Cpu)?;
        Ok(t.to_dtype(dtype)?)
    }

    /// Accepts a `C×H×W` tensor or a `1×C×H×W` batch of one.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let t = match t.rank() {
            3 => t.clone(),
            4 if t.dim(0)? == 1 => t.squeeze(0)?,
            _ => return Err(Error::Shape(format!("cannot view {:?} as an image", t.shape()))),
        };
        let (c, h, w) = t.dims3()?;
        let data = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
        Self::new(c, h, w, data)
    }
}

/// Stacks same-shaped images into an `N×C×H×W` tensor.
pub fn batch_to_tensor(images: &[Image], dtype: DType) -> Result<Tensor> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    let mut data = Vec::with_capacity(first.len() * images.len());
    for img in images {
        first.same_shape(img)?;
        data.extend_from_slice(img.data());
    }
    let (c, h, w) = first.shape();
    let t = Tensor::from_vec(data, (images.len(), c, h, w), &Device::Cpu)?;
    Ok(t.to_dtype(dtype)?)
}

pub fn tensor_to_batch(t: &Tensor) -> Result<Vec<Image>> {
    let (n, _, _, _) = t.dims4()?;
    (0..n).map(|i| Image::from_tensor(&t.get(i)?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Image::new(2, 1, 1, vec![0.0; 2]).is_err());
        assert!(Image::new(1, 0, 1, vec![]).is_err());
        assert!(Image::new(3, 2, 2, vec![0.0; 11]).is_err());
        assert!(Image::new(1, 1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn clip_bounds_values() {
        let img = Image::new(1, 1, 3, vec![-0.5, 0.5, 1.5]).unwrap();
        assert_eq!(img.clip().data(), &[0.0, 0.5, 1.0]);
        assert!(!img.is_in_unit_range());
        assert!(img.clip().is_in_unit_range());
    }

    #[test]
    fn tensor_round_trip() {
        let img = Image::from_fn(3, 4, 5, |c, y, x| (c * 20 + y * 5 + x) as f32 / 60.0).unwrap();
        let t = img.to_tensor(DType::F64).unwrap();
        assert_eq!(t.dims(), &[3, 4, 5]);
        assert_eq!(Image::from_tensor(&t).unwrap(), img);
        let b = batch_to_tensor(&[img.clone(), img.clone()], DType::F32).unwrap();
        assert_eq!(tensor_to_batch(&b).unwrap(), vec![img.clone(), img]);
    }

    #[test]
    fn crop_takes_window() {
        let img = Image::from_fn(1, 4, 4, |_, y, x| (y * 4 + x) as f32).unwrap();
        let c = img.crop(1, 2, 2, 2).unwrap();
        assert_eq!(c.data(), &[6.0, 7.0, 10.0, 11.0]);
        assert!(img.crop(3, 3, 2, 2).is_err());
    }
}
