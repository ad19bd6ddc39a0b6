//! Oracles and helpers shared by the integration tests. Everything here is
//! written from the definitions, without calling the code under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srrescycgan::Image;

// Small enough that a perturbation rarely crosses a ReLU, abs or clip kink,
// large enough that f64 roundoff stays far below the tolerance.
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-3;
// below this magnitude both gradients count as zero
const FD_FLOOR: f64 = 1e-7;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(seed: u64, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let mut r = rng(seed);
    let n = shape.iter().product();
    let v: Vec<f64> = (0..n).map(|_| r.random_range(lo..hi)).collect();
    Tensor::from_vec(v, shape, &Device::Cpu).unwrap()
}

/// `base` plus an offset of magnitude in `[0.05, 0.2]` and random sign, so no
/// element sits near the kink of an absolute value.
pub fn offset_from(base: &Tensor, seed: u64) -> Tensor {
    let mut r = rng(seed);
    let v: Vec<f64> = base
        .flatten_all()
        .unwrap()
        .to_vec1::<f64>()
        .unwrap()
        .into_iter()
        .map(|b| {
            let d = r.random_range(0.05..0.2);
            if r.random_bool(0.5) { b + d } else { b - d }
        })
        .collect();
    Tensor::from_vec(v, base.dims(), &Device::Cpu).unwrap()
}

pub fn scalar(t: &Tensor) -> f64 {
    t.to_dtype(DType::F64).unwrap().to_scalar::<f64>().unwrap()
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    let d = a.abs().max(n.abs());
    if d < FD_FLOOR {
        0.0
    } else {
        (a - n).abs() / d
    }
}

fn sample_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    let mut r = rng(seed);
    (0..k).map(|_| r.random_range(0..n)).collect()
}

/// Worst relative error between autodiff and central differences for
/// `loss(x)` over up to `samples` coordinates of `x`.
pub fn input_grad_error(x: &Tensor, samples: usize, seed: u64, loss: impl Fn(&Tensor) -> Tensor) -> f64 {
    let var = Var::from_tensor(x).unwrap();
    let grads = loss(var.as_tensor()).backward().unwrap();
    let analytic = grads.get(var.as_tensor()).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
    let base = x.flatten_all().unwrap().to_vec1::<f64>().unwrap();
    let mut worst: f64 = 0.0;
    for i in sample_indices(base.len(), samples, seed) {
        let eval = |delta: f64| {
            let mut v = base.clone();
            v[i] += delta;
            scalar(&loss(&Tensor::from_vec(v, x.dims(), &Device::Cpu).unwrap()))
        };
        let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

/// Worst relative error per trainable tensor of a network, checking up to
/// `samples` coordinates of each.
pub fn param_grad_errors(
    params: &BTreeMap<String, Var>,
    samples: usize,
    seed: u64,
    loss: impl Fn() -> Tensor,
) -> Vec<(String, f64)> {
    let grads = loss().backward().unwrap();
    params
        .iter()
        .enumerate()
        .map(|(k, (name, var))| {
            let original = var.as_tensor().copy().unwrap();
            let base = original.flatten_all().unwrap().to_vec1::<f64>().unwrap();
            let analytic = match grads.get(var.as_tensor()) {
                Some(g) => g.flatten_all().unwrap().to_vec1::<f64>().unwrap(),
                None => vec![0.0; base.len()],
            };
            let mut worst: f64 = 0.0;
            for i in sample_indices(base.len(), samples, seed + k as u64) {
                let eval = |delta: f64| {
                    let mut v = base.clone();
                    v[i] += delta;
                    var.set(&Tensor::from_vec(v, original.dims(), &Device::Cpu).unwrap()).unwrap();
                    scalar(&loss())
                };
                let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
                worst = worst.max(rel_err(analytic[i], numeric));
            }
            var.set(&original).unwrap();
            (name.clone(), worst)
        })
        .collect()
}

pub fn random_image(seed: u64, c: usize, h: usize, w: usize) -> Image {
    let mut r = rng(seed);
    Image::new(c, h, w, (0..c * h * w).map(|_| r.random_range(0.0f32..1.0)).collect()).unwrap()
}

/// Smooth random image (sum of low-frequency waves) with mild noise.
pub fn textured_image(seed: u64, c: usize, h: usize, w: usize) -> Image {
    let mut r = rng(seed);
    let waves: Vec<(f32, f32, f32)> = (0..3).map(|_| (r.random_range(0.1..0.6), r.random_range(0.1..0.6), r.random_range(0.0..6.0))).collect();
    Image::from_fn(c, h, w, |ch, y, x| {
        let s: f32 = waves.iter().map(|(fy, fx, p)| (fy * y as f32 + fx * x as f32 + p + ch as f32).sin()).sum();
        (0.5 + 0.12 * s + r.random_range(-0.05f32..0.05)).clamp(0.0, 1.0)
    })
    .unwrap()
}

/// SSIM by explicit sliding windows: 11×11 Gaussian (σ = 1.5), valid
/// positions only, C1 = 0.01², C2 = 0.03², averaged over positions then channels.
pub fn ssim_loop(a: &Image, b: &Image) -> f64 {
    let (c, h, w) = a.shape();
    let size = 11usize;
    let g: Vec<f64> = (0..size).map(|i| (-((i as f64 - 5.0).powi(2)) / (2.0 * 1.5 * 1.5)).exp()).collect();
    let gs: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / gs).collect();
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut per_channel = 0.0;
    for ch in 0..c {
        let mut sum = 0.0;
        let mut count = 0usize;
        for y0 in 0..=h - size {
            for x0 in 0..=w - size {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for dy in 0..size {
                    for dx in 0..size {
                        let k = g[dy] * g[dx];
                        let va = a.get(ch, y0 + dy, x0 + dx) as f64;
                        let vb = b.get(ch, y0 + dy, x0 + dx) as f64;
                        ma += k * va;
                        mb += k * vb;
                        saa += k * va * va;
                        sbb += k * vb * vb;
                        sab += k * va * vb;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        per_channel += sum / count as f64;
    }
    per_channel / c as f64
}

fn keys(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    let mut i = i.rem_euclid(2 * n);
    if i >= n {
        i = 2 * n - 1 - i;
    }
    i as usize
}

/// Dense 2-D convolution with the stretched Keys kernel followed by
/// subsampling: every output pixel sums weighted contributions from a wide
/// neighbourhood of mirrored input pixels, normalized to unit weight.
pub fn bicubic_down_dense(img: &Image, s: usize) -> Image {
    let (c, h, w) = img.shape();
    let (oh, ow) = (h / s, w / s);
    let sf = s as f64;
    let reach = 2 * s as i64 + 2;
    Image::from_fn(c, oh, ow, |ch, i, j| {
        let cy = (i as f64 + 0.5) * sf - 0.5;
        let cx = (j as f64 + 0.5) * sf - 0.5;
        let (mut acc, mut norm_y) = (0.0, 0.0);
        let mut wx_total = 0.0;
        for x in (cx.floor() as i64 - reach)..=(cx.floor() as i64 + reach) {
            wx_total += keys((cx - x as f64) / sf) / sf;
        }
        for y in (cy.floor() as i64 - reach)..=(cy.floor() as i64 + reach) {
            let wy = keys((cy - y as f64) / sf) / sf;
            norm_y += wy;
            for x in (cx.floor() as i64 - reach)..=(cx.floor() as i64 + reach) {
                let wx = keys((cx - x as f64) / sf) / sf;
                acc += wy * wx * img.get(ch, mirror(y, h), mirror(x, w)) as f64;
            }
        }
        (acc / (norm_y * wx_total)) as f32
    })
    .unwrap()
}

pub fn max_abs_diff(a: &Image, b: &Image) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs() as f64).fold(0.0, f64::max)
}

pub fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
