use rand::Rng;

use super::Image;
use crate::error::{Error, Result};

/// Samples an aligned `(lr_patch, hr_patch)` pair at a uniformly random offset.
///
/// The HR window starts at `scale ×` the LR offset and is `scale × lr_size` wide.
pub fn extract_patch_pair<R: Rng + ?Sized>(
    hr: &Image,
    lr: &Image,
    lr_size: usize,
    scale: usize,
    rng: &mut R,
) -> Result<(Image, Image)> {
    if scale == 0
        || hr.channels() != lr.channels()
        || hr.height() != lr.height() * scale
        || hr.width() != lr.width() * scale
    {
        return Err(Error::Shape(format!(
            "hr {:?} is not {scale}x lr {:?}",
            hr.shape(),
            lr.shape()
        )));
    }
    if lr_size == 0 || lr_size > lr.height().min(lr.width()) {
        return Err(Error::InvalidArgument(format!(
            "patch size {lr_size} does not fit lr {}x{}",
            lr.height(),
            lr.width()
        )));
    }
    let top = rng.random_range(0..=lr.height() - lr_size);
    let left = rng.random_range(0..=lr.width() - lr_size);
    let lr_patch = lr.crop(top, left, lr_size, lr_size)?;
    let hr_patch = hr.crop(top * scale, left * scale, lr_size * scale, lr_size * scale)?;
    Ok((lr_patch, hr_patch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(lr_side: usize, scale: usize) -> (Image, Image) {
        let hs = lr_side * scale;
        let hr = Image::from_fn(3, hs, hs, |c, y, x| ((c * 7 + y * 3 + x) % 255) as f32 / 255.0).unwrap();
        let n = (3 * lr_side * lr_side) as f32;
        let lr = Image::from_fn(3, lr_side, lr_side, |c, y, x| ((c * lr_side + y) * lr_side + x) as f32 / n).unwrap();
        (hr, lr)
    }

    #[test]
    fn full_size_patch_has_single_offset() {
        let (hr, lr) = pair(32, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (lp, hp) = extract_patch_pair(&hr, &lr, 32, 4, &mut rng).unwrap();
        assert_eq!(lp, lr);
        assert_eq!(hp, hr);
    }

    #[test]
    fn hr_patch_is_scale_aligned() {
        let (hr, lr) = pair(64, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (lp, hp) = extract_patch_pair(&hr, &lr, 32, 4, &mut rng).unwrap();
            assert_eq!(hp.shape(), (3, 128, 128));
            // recover the LR offset by search, then check the HR crop
            let (top, left) = (0..=32)
                .flat_map(|t| (0..=32).map(move |l| (t, l)))
                .find(|&(t, l)| lr.crop(t, l, 32, 32).unwrap() == lp)
                .unwrap();
            assert_eq!(hp, hr.crop(4 * top, 4 * left, 128, 128).unwrap());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (hr, lr) = pair(48, 2);
        let a = extract_patch_pair(&hr, &lr, 16, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = extract_patch_pair(&hr, &lr, 16, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let (hr, _) = pair(32, 4);
        let lr = Image::filled(3, 31, 32, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(extract_patch_pair(&hr, &lr, 16, 4, &mut rng), Err(Error::Shape(_))));
    }
}
