use crate::imaging::Image;

/// 3×3 Laplacian-style mask that cancels locally linear image content; its
/// squared weights sum to 36.
const MASK: [[f64; 3]; 3] = [[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]];
const MASK_NORM: f64 = 6.0;
/// Median of |N(0, 1)|.
const MAD_TO_SIGMA: f64 = 0.6745;
pub const MAX_SIGMA: f64 = 50.0;

/// Robust single-image noise level in 8-bit units: `median(|d|)/0.6745 · 255`
/// where `d` is the normalized high-pass response over the interior of every
/// channel. Clamped to `[0, 50]`.
pub fn estimate_noise_sigma(img: &Image) -> f64 {
    let (c, h, w) = img.shape();
    if h < 3 || w < 3 {
        return 0.0;
    }
    let mut responses = Vec::with_capacity(c * (h - 2) * (w - 2));
    for ch in 0..c {
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let mut acc = 0.0;
                for (dy, row) in MASK.iter().enumerate() {
                    for (dx, k) in row.iter().enumerate() {
                        acc += k * img.get(ch, y + dy - 1, x + dx - 1) as f64;
                    }
                }
                responses.push((acc / MASK_NORM).abs());
            }
        }
    }
    let mid = responses.len() / 2;
    let (_, median, _) = responses.select_nth_unstable_by(mid, f64::total_cmp);
    let mut median = *median;
    if responses.len() % 2 == 0 {
        let lower = responses[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        median = 0.5 * (median + lower);
    }
    (median / MAD_TO_SIGMA * 255.0).clamp(0.0, MAX_SIGMA)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy(sigma: f64, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sigma / 255.0).unwrap();
        Image::from_fn(3, 96, 96, |_, _, _| (0.5 + n.sample(&mut rng)) as f32).unwrap()
    }

    #[test]
    fn recovers_white_noise_level() {
        for seed in 0..5 {
            let s = estimate_noise_sigma(&noisy(8.0, seed));
            assert!((6.5..=9.5).contains(&s), "seed {seed}: {s}");
        }
    }

    #[test]
    fn constant_and_ramp_images_have_no_noise() {
        assert_eq!(estimate_noise_sigma(&Image::filled(3, 20, 20, 0.7).unwrap()), 0.0);
        let ramp = Image::from_fn(1, 20, 20, |_, y, x| (x + 2 * y) as f32 / 80.0).unwrap();
        assert!(estimate_noise_sigma(&ramp) < 1e-3);
    }

    #[test]
    fn offset_invariant() {
        let a = noisy(5.0, 3);
        let b = a.map(|v| v + 0.125).unwrap();
        assert!((estimate_noise_sigma(&a) - estimate_noise_sigma(&b)).abs() < 1e-3);
    }

    #[test]
    fn clamped_at_fifty() {
        assert_eq!(estimate_noise_sigma(&noisy(120.0, 1)), MAX_SIGMA);
    }
}
