use candle_core::DType;
use srrescycgan::models::{GsrConfig, SrGenerator};
use srrescycgan::{Image, SuperResolver};

fn model(seed: u64) -> SuperResolver {
    SuperResolver::new(SrGenerator::new(GsrConfig { feat_maps: 16, resblocks: 2, ..GsrConfig::default() }, DType::F32, seed).unwrap())
}

fn lr(h: usize, w: usize) -> Image {
    Image::from_fn(3, h, w, |c, y, x| ((x * 3 + y * 5 + c * 7) % 17) as f32 / 16.0).unwrap()
}

#[test]
fn output_is_four_times_larger_and_repeatable() {
    let m = model(1);
    let input = lr(50, 60);
    let a = m.super_resolve(&input).unwrap();
    assert_eq!(a.shape(), (3, 200, 240));
    assert!(a.is_in_unit_range());
    assert_eq!(a, m.super_resolve(&input).unwrap());
}

#[test]
fn ensemble_keeps_shape_and_stays_within_branches() {
    let m = model(2);
    let input = lr(9, 13);
    let e = m.super_resolve_ensemble(&input).unwrap();
    assert_eq!(e.shape(), m.super_resolve(&input).unwrap().shape());
    let branches = m.ensemble_branches(&input).unwrap();
    assert_eq!(branches.len(), 8);
    for (i, v) in e.data().iter().enumerate() {
        let lo = branches.iter().map(|b| b.data()[i]).fold(f32::INFINITY, f32::min);
        let hi = branches.iter().map(|b| b.data()[i]).fold(f32::NEG_INFINITY, f32::max);
        assert!(*v >= lo - 1e-6 && *v <= hi + 1e-6);
    }
}

#[test]
fn checkpoint_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, b"not a checkpoint").unwrap();
    assert!(SuperResolver::load(&bad).is_err());
    assert!(SuperResolver::load(dir.path().join("missing.ckpt")).is_err());
}
