use std::path::Path;

use image::{DynamicImage, ExtendedColorType, ImageFormat, ImageReader};

use super::Image;
use crate::error::{Error, Result};

/// Reads an 8-bit grayscale or RGB PNG; each byte maps to `byte / 255`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)?.with_guessed_format()?;
    if reader.format() != Some(ImageFormat::Png) {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("expected PNG, found {:?}", reader.format()),
        });
    }
    let decoded = reader.decode()?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, interleaved) = match decoded {
        DynamicImage::ImageLuma8(buf) => (1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => (3, buf.into_raw()),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgba8(_) => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "alpha channel".into(),
            })
        }
        other => {
            return Err(Error::UnsupportedBitDepth {
                path: path.to_path_buf(),
                detail: format!("{:?}", other.color()),
            })
        }
    };
    Image::from_fn(channels, height, width, |c, y, x| {
        interleaved[(y * width + x) * channels + c] as f32 / 255.0
    })
}

/// Quantizes with `round(v * 255)`. Values outside `[0, 1]` are rejected.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let bytes = to_interleaved_u8(img)?;
    let color = if img.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    image::save_buffer_with_format(
        path,
        &bytes,
        img.width() as u32,
        img.height() as u32,
        color,
        ImageFormat::Png,
    )?;
    Ok(())
}

/// Interleaved (HWC) 8-bit samples, `round(v * 255)` per value.
pub(crate) fn to_interleaved_u8(img: &Image) -> Result<Vec<u8>> {
    if let Some((index, &value)) = img
        .data()
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::OutOfRange { index, value });
    }
    let (c, h, w) = img.shape();
    let mut out = vec![0u8; c * h * w];
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                out[(y * w + x) * c + ch] = quantize(img.get(ch, y, x));
            }
        }
    }
    Ok(out)
}

pub(crate) fn from_interleaved_u8(bytes: &[u8], channels: usize, height: usize, width: usize) -> Result<Image> {
    Image::from_fn(channels, height, width, |c, y, x| {
        bytes[(y * width + x) * channels + c] as f32 / 255.0
    })
}

#[inline]
pub(crate) fn quantize(v: f32) -> u8 {
    (v * 255.0).round() as u8
}
