use candle_core::{DType, Device, Tensor};
use proptest::prelude::*;
use srrescycgan::degradation::{add_sensor_noise, bicubic_downsample};
use srrescycgan::imaging::{apply_transform, GeomTransform};
use srrescycgan::losses::{
    composite_generator_loss, content_l1, tv_discrepancy_loss, IdentityFeatures, GeneratorLossInputs, LossPreset,
    LossWeights,
};
use srrescycgan::metrics::{psnr, ssim};
use srrescycgan::models::project_l2_ball;
use srrescycgan::training::{estimate_noise_sigma, learning_rate};
use srrescycgan::Image;

fn image(c: usize, h: usize, w: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0.0f32..=1.0, c * h * w).prop_map(move |v| Image::new(c, h, w, v).unwrap())
}

fn sized_image() -> impl Strategy<Value = Image> {
    (prop::sample::select(vec![1usize, 3]), 2usize..=12, 2usize..=12).prop_flat_map(|(c, h, w)| image(c, h, w))
}

fn pair(h: usize, w: usize) -> impl Strategy<Value = (Image, Image)> {
    (image(3, h, w), image(3, h, w))
}

fn t(img: &Image) -> Tensor {
    img.to_tensor(DType::F64).unwrap().unsqueeze(0).unwrap()
}

fn s(x: &Tensor) -> f64 {
    x.to_scalar::<f64>().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn clip_lands_in_unit_range(v in prop::collection::vec(-3.0f32..3.0, 12)) {
        let img = Image::new(1, 3, 4, v).unwrap().clip();
        prop_assert!(img.is_in_unit_range());
        prop_assert_eq!(img.clip(), img);
    }

    #[test]
    fn transforms_invert(img in sized_image(), r in 0u8..4, flip: bool) {
        let t = GeomTransform::new(r, flip);
        prop_assert_eq!(apply_transform(&apply_transform(&img, t), t.inverse()), img);
    }

    #[test]
    fn projection_stays_in_ball(v in prop::collection::vec(-5.0f64..5.0, 1..40), r in 0.0f64..4.0) {
        let z = Tensor::from_vec(v.clone(), (1, v.len()), &Device::Cpu).unwrap();
        let radius = Tensor::new(&[r], &Device::Cpu).unwrap();
        let p = project_l2_ball(&z, &radius).unwrap();
        let norm = p.sqr().unwrap().sum_all().unwrap().sqrt().unwrap().to_scalar::<f64>().unwrap();
        prop_assert!(norm <= r * (1.0 + 1e-12) + 1e-12);
        let pp = project_l2_ball(&p, &radius).unwrap();
        let d = (pp - &p).unwrap().abs().unwrap().max_all().unwrap().to_scalar::<f64>().unwrap();
        prop_assert!(d <= 1e-6);
    }

    #[test]
    fn ssim_is_bounded_and_symmetric((a, b) in pair(16, 16)) {
        let ab = ssim(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ab - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_is_symmetric((a, b) in pair(6, 5)) {
        let p = psnr(&a, &b).unwrap();
        prop_assert_eq!(p, psnr(&b, &a).unwrap());
        prop_assert!(p > 0.0 || a == b);
    }

    #[test]
    fn pixel_losses_are_nonnegative_and_translation_invariant((a, b) in pair(8, 8), k in -0.5f64..0.5) {
        let (ta, tb) = (t(&a), t(&b));
        prop_assert!(s(&content_l1(&ta, &tb).unwrap()) >= 0.0);
        let tv = s(&tv_discrepancy_loss(&ta, &tb).unwrap());
        prop_assert!(tv >= 0.0 && tv.is_finite());
        let shifted = s(&tv_discrepancy_loss(&(&ta + k).unwrap(), &tb).unwrap());
        prop_assert!((tv - shifted).abs() < 1e-9);
    }

    #[test]
    fn composite_is_linear_in_weights((a, b) in pair(12, 12), logits in prop::collection::vec(-3.0f64..3.0, 4)) {
        let real = Tensor::from_vec(logits[..2].to_vec(), 2, &Device::Cpu).unwrap();
        let fake = Tensor::from_vec(logits[2..].to_vec(), 2, &Device::Cpu).unwrap();
        let (ta, tb) = (t(&a), t(&b));
        let inputs = GeneratorLossInputs { sr: &ta, hr: &tb, dx_real: &real, dx_fake: &fake, cycle: None };
        let w = LossWeights::preset(LossPreset::Perceptual);
        let (l1, b1) = composite_generator_loss(&inputs, &w, &IdentityFeatures).unwrap();
        let (l2, _) = composite_generator_loss(&inputs, &w.scaled(2.0), &IdentityFeatures).unwrap();
        prop_assert!((2.0 * s(&l1) - s(&l2)).abs() < 1e-9 * s(&l2).abs().max(1.0));
        prop_assert!(b1.terms.all_finite());
        prop_assert!(b1.terms.l_gan >= 0.0 && b1.terms.l_ssim >= 0.0 && b1.terms.l_ssim <= 2.0);
    }

    #[test]
    fn noise_estimate_ignores_offsets(img in image(3, 10, 10), k in -0.3f32..0.3) {
        let base = img.map(|v| 0.35 + 0.3 * v).unwrap();
        let moved = base.map(|v| v + k).unwrap();
        let (a, b) = (estimate_noise_sigma(&base), estimate_noise_sigma(&moved));
        prop_assert!((a - b).abs() < 1e-3, "{} vs {}", a, b);
        prop_assert!((0.0..=50.0).contains(&a));
    }

    #[test]
    fn bicubic_preserves_constants(v in 0.0f32..=1.0, s in prop::sample::select(vec![1usize, 2, 3, 4])) {
        let out = bicubic_downsample(&Image::filled(3, 12 * s, 12 * s, v).unwrap(), s).unwrap();
        prop_assert!(out.data().iter().all(|p| (p - v).abs() <= 1e-6));
    }

    #[test]
    fn noise_is_seed_deterministic(img in image(1, 6, 6), seed: u64) {
        prop_assert_eq!(add_sensor_noise(&img, 8.0, seed).unwrap(), add_sensor_noise(&img, 8.0, seed).unwrap());
    }

    #[test]
    fn schedule_is_closed_form(i in 0u64..60_000) {
        let ms = [5_000u64, 10_000, 20_000, 30_000];
        let passed = ms.iter().filter(|&&m| i >= m).count() as i32;
        prop_assert_eq!(learning_rate(1e-4, &ms, 0.5, i), 1e-4 * 0.5f64.powi(passed));
    }
}
