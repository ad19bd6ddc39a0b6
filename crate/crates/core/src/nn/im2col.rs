//! Patch unfolding for convolutions, with zero or reflection borders.
//!
//! `Im2Col` maps `N×C×H×W` to `(C·kh·kw)×(N·Ho·Wo)`; `Col2Im` is its adjoint
//! (scatter-add back onto the input grid). Each is the other's gradient.

use candle_core::{CpuStorage, CustomOp1, Layout, Shape, Tensor, WithDType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Unfold {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub reflect: bool,
}

impl Unfold {
    pub fn out_hw(&self) -> (usize, usize) {
        ((self.h + 2 * self.pad - self.kh) / self.stride + 1, (self.w + 2 * self.pad - self.kw) / self.stride + 1)
    }

    pub fn rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    /// Source index along one axis for every output position and tap, or `None` for zero border.
    fn table(&self, n: usize, k: usize, out: usize) -> Vec<Option<usize>> {
        let n = n as isize;
        let mut t = Vec::with_capacity(k * out);
        for tap in 0..k {
            for o in 0..out {
                let i = (o * self.stride + tap) as isize - self.pad as isize;
                t.push(if (0..n).contains(&i) {
                    Some(i as usize)
                } else if self.reflect {
                    Some(if i < 0 { -i } else { 2 * (n - 1) - i } as usize)
                } else {
                    None
                });
            }
        }
        t
    }

    /// Output columns `lo..hi` whose source index `o*stride + tap - pad` is in bounds.
    fn interior(&self, n: usize, tap: usize, out: usize) -> (usize, usize) {
        let s = self.stride;
        let lo = self.pad.saturating_sub(tap).div_ceil(s).min(out);
        // largest o with o*s + tap - pad <= n - 1
        let hi = if n + self.pad > tap { ((n - 1 + self.pad - tap) / s + 1).min(out) } else { 0 };
        (lo, hi.max(lo))
    }

    fn unfold<T: WithDType>(&self, x: &[T], batch: usize) -> Vec<T> {
        let (ho, wo) = self.out_hw();
        let (ty, tx) = (self.table(self.h, self.kh, ho), self.table(self.w, self.kw, wo));
        let plane = self.h * self.w;
        let p = ho * wo;
        let mut out = vec![T::zero(); batch * self.rows() * p];
        for n in 0..batch {
            for c in 0..self.c {
                let src = &x[(n * self.c + c) * plane..][..plane];
                for ky in 0..self.kh {
                    for kx in 0..self.kw {
                        let r = (c * self.kh + ky) * self.kw + kx;
                        let row = &mut out[(r * batch + n) * p..][..p];
                        let (lo, hi) = self.interior(self.w, kx, wo);
                        let tx = &tx[kx * wo..][..wo];
                        for oy in 0..ho {
                            let Some(iy) = ty[ky * ho + oy] else { continue };
                            let line = &src[iy * self.w..][..self.w];
                            let d = &mut row[oy * wo..][..wo];
                            for ox in (0..lo).chain(hi..wo) {
                                if let Some(ix) = tx[ox] {
                                    d[ox] = line[ix];
                                }
                            }
                            if hi > lo {
                                let start = lo * self.stride + kx - self.pad;
                                if self.stride == 1 {
                                    d[lo..hi].copy_from_slice(&line[start..start + hi - lo]);
                                } else {
                                    for (dst, src) in d[lo..hi].iter_mut().zip(line[start..].iter().step_by(self.stride)) {
                                        *dst = *src;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn fold<T: WithDType>(&self, cols: &[T], batch: usize) -> Vec<T> {
        let (ho, wo) = self.out_hw();
        let (ty, tx) = (self.table(self.h, self.kh, ho), self.table(self.w, self.kw, wo));
        let plane = self.h * self.w;
        let p = ho * wo;
        let mut out = vec![T::zero(); batch * self.c * plane];
        for n in 0..batch {
            for c in 0..self.c {
                let dst = &mut out[(n * self.c + c) * plane..][..plane];
                for ky in 0..self.kh {
                    for kx in 0..self.kw {
                        let r = (c * self.kh + ky) * self.kw + kx;
                        let row = &cols[(r * batch + n) * p..][..p];
                        let (lo, hi) = self.interior(self.w, kx, wo);
                        let tx = &tx[kx * wo..][..wo];
                        for oy in 0..ho {
                            let Some(iy) = ty[ky * ho + oy] else { continue };
                            let line = &mut dst[iy * self.w..][..self.w];
                            let v = &row[oy * wo..][..wo];
                            for ox in (0..lo).chain(hi..wo) {
                                if let Some(ix) = tx[ox] {
                                    line[ix] += v[ox];
                                }
                            }
                            if hi > lo {
                                let start = lo * self.stride + kx - self.pad;
                                for (dst, &src) in line[start..].iter_mut().step_by(self.stride).zip(&v[lo..hi]) {
                                    *dst += src;
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn contiguous<'a, T>(data: &'a [T], layout: &Layout) -> candle_core::Result<&'a [T]> {
    match layout.contiguous_offsets() {
        Some((a, b)) => Ok(&data[a..b]),
        None => Err(candle_core::Error::RequiresContiguous { op: "im2col" }.bt()),
    }
}

pub(crate) struct Im2Col(pub Unfold);
pub(crate) struct Col2Im(pub Unfold);

impl CustomOp1 for Im2Col {
    fn name(&self) -> &'static str {
        "im2col"
    }

    fn cpu_fwd(&self, storage: &CpuStorage, layout: &Layout) -> candle_core::Result<(CpuStorage, Shape)> {
        let u = self.0;
        let (n, c, h, w) = layout.shape().dims4()?;
        if (c, h, w) != (u.c, u.h, u.w) {
            candle_core::bail!("im2col configured for {:?}, got {:?}", (u.c, u.h, u.w), (c, h, w));
        }
        let (ho, wo) = u.out_hw();
        let shape = Shape::from((u.rows(), n * ho * wo));
        let out = match storage {
            CpuStorage::F32(v) => CpuStorage::F32(u.unfold(contiguous(v, layout)?, n)),
            CpuStorage::F64(v) => CpuStorage::F64(u.unfold(contiguous(v, layout)?, n)),
            _ => candle_core::bail!("im2col supports f32 and f64 only"),
        };
        Ok((out, shape))
    }

    fn bwd(&self, _arg: &Tensor, _res: &Tensor, grad_res: &Tensor) -> candle_core::Result<Option<Tensor>> {
        Ok(Some(grad_res.contiguous()?.apply_op1(Col2Im(self.0))?))
    }
}

impl CustomOp1 for Col2Im {
    fn name(&self) -> &'static str {
        "col2im"
    }

    fn cpu_fwd(&self, storage: &CpuStorage, layout: &Layout) -> candle_core::Result<(CpuStorage, Shape)> {
        let u = self.0;
        let (rows, cols) = layout.shape().dims2()?;
        let (ho, wo) = u.out_hw();
        if rows != u.rows() || cols % (ho * wo) != 0 {
            candle_core::bail!("col2im expects {} rows and a multiple of {} columns, got {:?}", u.rows(), ho * wo, (rows, cols));
        }
        let n = cols / (ho * wo);
        let shape = Shape::from((n, u.c, u.h, u.w));
        let out = match storage {
            CpuStorage::F32(v) => CpuStorage::F32(u.fold(contiguous(v, layout)?, n)),
            CpuStorage::F64(v) => CpuStorage::F64(u.fold(contiguous(v, layout)?, n)),
            _ => candle_core::bail!("col2im supports f32 and f64 only"),
        };
        Ok((out, shape))
    }

    fn bwd(&self, _arg: &Tensor, _res: &Tensor, grad_res: &Tensor) -> candle_core::Result<Option<Tensor>> {
        Ok(Some(grad_res.contiguous()?.apply_op1(Im2Col(self.0))?))
    }
}
