//! Synthetic observation model: bicubic shrink, additive Gaussian sensor
//! noise, then optional JPEG compression, in that order.

mod bicubic;
mod manifest;

pub use bicubic::{cubic, resize_matrix, resize_taps};
pub use manifest::{degrade_dir, list_pngs, read_manifest, write_manifest, ManifestRow, MANIFEST_FILE};

use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageFormat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::io::{from_interleaved_u8, to_interleaved_u8};
use crate::imaging::Image;

/// JPEG quality setting; `Off` skips compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JpegQuality {
    Off,
    Quality(u8),
}

impl fmt::Display for JpegQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JpegQuality::Off => f.write_str("off"),
            JpegQuality::Quality(q) => write!(f, "{q}"),
        }
    }
}

impl FromStr for JpegQuality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("off") {
            return Ok(JpegQuality::Off);
        }
        let q: u8 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("jpeg quality {s:?} is neither 'off' nor 1..=100")))?;
        check_quality(q)?;
        Ok(JpegQuality::Quality(q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub scale: usize,
    /// Noise standard deviation in 8-bit units (8 means 8/255).
    pub noise_sigma: f64,
    pub jpeg_quality: JpegQuality,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn identity() -> Self {
        Self { scale: 1, noise_sigma: 0.0, jpeg_quality: JpegQuality::Off, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.scale) {
            return Err(Error::InvalidArgument(format!("scale {} not in 1..=4", self.scale)));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        if let JpegQuality::Quality(q) = self.jpeg_quality {
            check_quality(q)?;
        }
        Ok(())
    }
}

fn check_quality(q: u8) -> Result<()> {
    if (1..=100).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("jpeg quality {q} not in 1..=100")))
    }
}

/// Anti-aliased bicubic shrink by an integer factor. Not clipped.
pub fn bicubic_downsample(img: &Image, scale: usize) -> Result<Image> {
    let (_, h, w) = img.shape();
    if scale == 0 || h % scale != 0 || w % scale != 0 {
        return Err(Error::Shape(format!("{h}x{w} is not divisible by {scale}")));
    }
    resize(img, h / scale, w / scale)
}

/// Bicubic enlargement by an integer factor. Not clipped.
pub fn bicubic_upsample(img: &Image, scale: usize) -> Result<Image> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be >= 1".into()));
    }
    resize(img, img.height() * scale, img.width() * scale)
}

fn resize(img: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    let (c, h, w) = img.shape();
    if (out_h, out_w) == (h, w) {
        return Ok(img.clone());
    }
    let mut data = Vec::with_capacity(c * out_h * out_w);
    for ch in 0..c {
        let plane: Vec<f64> = img.data()[ch * h * w..(ch + 1) * h * w]
            .iter()
            .map(|&v| v as f64)
            .collect();
        data.extend(bicubic::resize_plane(&plane, h, w, out_h, out_w).into_iter().map(|v| v as f32));
    }
    Image::new(c, out_h, out_w, data)
}

/// `clip(img + n)` with `n ~ N(0, (sigma/255)^2)` i.i.d., seeded.
pub fn add_sensor_noise(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma / 255.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| ((v as f64 + normal.sample(&mut rng)) as f32).clamp(0.0, 1.0))
        .collect();
    Image::new(img.channels(), img.height(), img.width(), data)
}

/// Encode/decode round trip through the baseline JPEG codec at quality `q`.
/// The input is clamped to `[0, 1]` before 8-bit quantization.
pub fn jpeg_compress(img: &Image, q: u8) -> Result<Image> {
    check_quality(q)?;
    let clipped = img.clip();
    let bytes = to_interleaved_u8(&clipped)?;
    let (c, h, w) = img.shape();
    let color = if c == 1 { ExtendedColorType::L8 } else { ExtendedColorType::Rgb8 };
    let mut encoded = Vec::new();
    JpegEncoder::new_with_quality(&mut encoded, q).encode(&bytes, w as u32, h as u32, color)?;
    let decoded = image::load(Cursor::new(encoded), ImageFormat::Jpeg)?;
    let raw = if c == 1 {
        decoded.to_luma8().into_raw()
    } else {
        decoded.to_rgb8().into_raw()
    };
    from_interleaved_u8(&raw, c, h, w)
}

/// Downsample, clip, add noise, then JPEG, per `spec`.
pub fn degrade(hr: &Image, spec: &DegradationSpec) -> Result<Image> {
    spec.validate()?;
    let lr = bicubic_downsample(hr, spec.scale)?.clip();
    let lr = add_sensor_noise(&lr, spec.noise_sigma, spec.seed)?;
    match spec.jpeg_quality {
        JpegQuality::Off => Ok(lr),
        JpegQuality::Quality(q) => jpeg_compress(&lr, q),
    }
}
