//! Separable bicubic resampling (Keys kernel, `a = -0.5`).
//!
//! Output sample `i` sits at input coordinate `(i + 0.5) / scale - 0.5`.
//! When shrinking, the kernel is stretched by the shrink factor (anti-aliasing).
//! Out-of-range taps reflect about the border with edge duplication
//! (`-1 -> 0`, `n -> n-1`), and every row of weights sums to one.

const A: f64 = -0.5;

pub fn cubic(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        (A + 2.0) * x.powi(3) - (A + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        A * x.powi(3) - 5.0 * A * x * x + 8.0 * A * x - 4.0 * A
    } else {
        0.0
    }
}

pub(crate) fn reflect_index(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Taps `(input index, weight)` for each output sample of a 1-D resize.
pub fn resize_taps(in_len: usize, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = out_len as f64 / in_len as f64;
    let (stretch, support) = if scale < 1.0 { (scale, 4.0 / scale) } else { (1.0, 4.0) };
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            let left = (center - support / 2.0).floor() as i64;
            let count = support.ceil() as i64 + 2;
            let mut taps: Vec<(usize, f64)> = (left..left + count)
                .filter_map(|j| {
                    let w = stretch * cubic(stretch * (center - j as f64));
                    (w != 0.0).then(|| (reflect_index(j, in_len), w))
                })
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

/// Dense `out_len × in_len` row-major resize matrix.
pub fn resize_matrix(in_len: usize, out_len: usize) -> Vec<f64> {
    let mut m = vec![0.0; out_len * in_len];
    for (i, taps) in resize_taps(in_len, out_len).into_iter().enumerate() {
        for (j, w) in taps {
            m[i * in_len + j] += w;
        }
    }
    m
}

/// Resizes one `h×w` plane (row-major) to `out_h×out_w`, rows first.
pub(crate) fn resize_plane(plane: &[f64], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let col_taps = resize_taps(w, out_w);
    let mut tmp = vec![0.0; h * out_w];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for (x, taps) in col_taps.iter().enumerate() {
            tmp[y * out_w + x] = taps.iter().map(|&(j, wt)| row[j] * wt).sum();
        }
    }
    let row_taps = resize_taps(h, out_h);
    let mut out = vec![0.0; out_h * out_w];
    for (y, taps) in row_taps.iter().enumerate() {
        for x in 0..out_w {
            out[y * out_w + x] = taps.iter().map(|&(j, wt)| tmp[j * out_w + x] * wt).sum();
        }
    }
    out
}
