use candle_core::{Device, Tensor, Var, D};

use super::im2col::{Im2Col, Unfold};
use super::{Init, Mode, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Mirror without repeating the edge sample (`-1 -> 1`).
    Reflect(usize),
    Zero(usize),
}

/// Reflection-pads the last two dimensions of an `N×C×H×W` tensor.
pub fn reflect_pad(x: &Tensor, pad: usize) -> Result<Tensor> {
    if pad == 0 {
        return Ok(x.clone());
    }
    let (_, _, h, w) = x.dims4()?;
    if pad >= h || pad >= w {
        return Err(Error::Shape(format!("reflection pad {pad} needs dims > pad, got {h}x{w}")));
    }
    let x = x.index_select(&reflect_indices(h, pad)?, 2)?;
    Ok(x.index_select(&reflect_indices(w, pad)?, 3)?)
}

fn reflect_indices(n: usize, pad: usize) -> Result<Tensor> {
    let n = n as i64;
    let idx: Vec<u32> = (-(pad as i64)..n + pad as i64)
        .map(|i| {
            let i = if i < 0 { -i } else if i >= n { 2 * (n - 1) - i } else { i };
            i as u32
        })
        .collect();
    Ok(Tensor::from_vec(idx, n as usize + 2 * pad, &Device::Cpu)?)
}

/// 2-D cross-correlation of `N×C×H×W` input with an `O×C×kh×kw` kernel,
/// lowered to patch unfolding plus one matrix product.
pub fn conv2d(x: &Tensor, weight: &Tensor, padding: Padding, stride: usize) -> Result<Tensor> {
    let (n, c, h, w) = x.dims4()?;
    let (o, wc, kh, kw) = weight.dims4()?;
    let (pad, reflect) = match padding {
        Padding::Reflect(p) => (p, true),
        Padding::Zero(p) => (p, false),
    };
    if wc != c || stride == 0 {
        return Err(Error::Shape(format!("conv kernel {:?} on input {:?} stride {stride}", weight.dims(), x.dims())));
    }
    if h + 2 * pad < kh || w + 2 * pad < kw {
        return Err(Error::Shape(format!("kernel {kh}x{kw} larger than padded input {h}x{w}+{pad}")));
    }
    if reflect && (pad >= h || pad >= w) {
        return Err(Error::Shape(format!("reflection pad {pad} needs dims > pad, got {h}x{w}")));
    }
    let u = Unfold { c, h, w, kh, kw, stride, pad, reflect };
    let (ho, wo) = u.out_hw();
    let cols = x.contiguous()?.apply_op1(Im2Col(u))?;
    let y = weight.reshape((o, u.rows()))?.matmul(&cols)?;
    Ok(y.reshape((o, n, ho, wo))?.transpose(0, 1)?.contiguous()?)
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    Ok(x.maximum(&(x * slope)?)?)
}

#[derive(Debug, Clone)]
pub struct Conv2d {
    weight: Var,
    bias: Option<Var>,
    stride: usize,
    padding: Padding,
}

impl Conv2d {
    /// Weights and bias drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        init: &mut Init,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        bias: bool,
    ) -> Result<Self> {
        let fan_in = in_ch * kernel * kernel;
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weight = store.add_param(
            format!("{name}.weight"),
            init.uniform(out_ch * fan_in, bound),
            &[out_ch, in_ch, kernel, kernel],
        )?;
        let bias = if bias {
            Some(store.add_param(format!("{name}.bias"), init.uniform(out_ch, bound), &[out_ch])?)
        } else {
            None
        };
        Ok(Self { weight, bias, stride, padding })
    }

    pub fn weight(&self) -> &Var {
        &self.weight
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = conv2d(x, self.weight.as_tensor(), self.padding, self.stride)?;
        match &self.bias {
            Some(b) => Ok(y.broadcast_add(&b.as_tensor().reshape((1, (), 1, 1))?)?),
            None => Ok(y),
        }
    }
}

/// Parametric ReLU with one learned negative slope per channel.
#[derive(Debug, Clone)]
pub struct PRelu {
    slope: Var,
}

impl PRelu {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        let slope = store.add_param(format!("{name}.slope"), vec![0.25; channels], &[channels])?;
        Ok(Self { slope })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let slope = self.slope.as_tensor().reshape((1, (), 1, 1))?;
        Ok((x.relu()? + x.minimum(0.0)?.broadcast_mul(&slope)?)?)
    }
}

/// Batch normalization over `N×C×H×W`, with running statistics for eval mode.
#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    gamma: Var,
    beta: Var,
    running_mean: Var,
    running_var: Var,
    eps: f64,
    momentum: f64,
}

impl BatchNorm2d {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            gamma: store.add_param(format!("{name}.gamma"), vec![1.0; channels], &[channels])?,
            beta: store.add_param(format!("{name}.beta"), vec![0.0; channels], &[channels])?,
            running_mean: store.add_buffer(format!("{name}.running_mean"), vec![0.0; channels], &[channels])?,
            running_var: store.add_buffer(format!("{name}.running_var"), vec![1.0; channels], &[channels])?,
            eps: 1e-5,
            momentum: 0.1,
        })
    }

    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let (n, c, h, w) = x.dims4()?;
        let (mean, var) = match mode {
            Mode::Train => {
                let count = (n * h * w) as f64;
                let flat = x.transpose(0, 1)?.reshape((c, ()))?;
                let mean = flat.mean(D::Minus1)?;
                let centered = flat.broadcast_sub(&mean.unsqueeze(1)?)?;
                let var = centered.sqr()?.mean(D::Minus1)?;
                let unbiased = (var.detach() * (count / (count - 1.0).max(1.0)))?;
                let m = self.momentum;
                self.running_mean
                    .set(&((self.running_mean.as_tensor() * (1.0 - m))? + (mean.detach() * m)?)?)?;
                self.running_var
                    .set(&((self.running_var.as_tensor() * (1.0 - m))? + (unbiased * m)?)?)?;
                (mean, var)
            }
            Mode::Eval => (
                self.running_mean.as_tensor().clone(),
                self.running_var.as_tensor().clone(),
            ),
        };
        let shape = (1, c, 1, 1);
        let inv_std = (var + self.eps)?.sqrt()?.recip()?;
        let scale = (inv_std * self.gamma.as_tensor())?.reshape(shape)?;
        let shift = self.beta.as_tensor().reshape(shape)?;
        Ok(x.broadcast_sub(&mean.reshape(shape)?)?
            .broadcast_mul(&scale)?
            .broadcast_add(&shift)?)
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    weight: Var,
    bias: Var,
}

impl Linear {
    pub fn new(store: &mut ParamStore, init: &mut Init, name: &str, in_f: usize, out_f: usize) -> Result<Self> {
        let bound = 1.0 / (in_f as f64).sqrt();
        Ok(Self {
            weight: store.add_param(format!("{name}.weight"), init.uniform(in_f * out_f, bound), &[out_f, in_f])?,
            bias: store.add_param(format!("{name}.bias"), init.uniform(out_f, bound), &[out_f])?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.matmul(&self.weight.as_tensor().t()?)?.broadcast_add(self.bias.as_tensor())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::DType;

    fn t(values: &[f64], shape: &[usize]) -> Tensor {
        Tensor::from_slice(values, shape, &Device::Cpu).unwrap()
    }

    #[test]
    fn conv2d_matches_direct_convolution() {
        let mut init = Init::new(4);
        for (c, o, k, pad, stride, h, w) in [(3, 5, 3, 1, 1, 9, 7), (2, 4, 4, 1, 2, 10, 11), (4, 3, 5, 2, 2, 9, 9), (1, 1, 1, 0, 1, 3, 5), (2, 3, 3, 0, 3, 8, 10), (1, 2, 5, 2, 1, 3, 4), (2, 2, 4, 3, 2, 2, 5)] {
            let x = t(&init.uniform(2 * c * h * w, 1.0), &[2, c, h, w]);
            let k_t = t(&init.uniform(o * c * k * k, 1.0), &[o, c, k, k]);
            let want = x.conv2d(&k_t, pad, stride, 1, 1).unwrap();
            let got = conv2d(&x, &k_t, Padding::Zero(pad), stride).unwrap();
            assert_eq!(got.dims(), want.dims());
            let err = (got - want).unwrap().abs().unwrap().max_all().unwrap().to_scalar::<f64>().unwrap();
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn reflect_conv_matches_padded_convolution() {
        let mut init = Init::new(5);
        let x = t(&init.uniform(2 * 3 * 6 * 7, 1.0), &[2, 3, 6, 7]);
        let k = t(&init.uniform(4 * 3 * 25, 1.0), &[4, 3, 5, 5]);
        for stride in [1, 2] {
            let want = reflect_pad(&x, 2).unwrap().conv2d(&k, 0, stride, 1, 1).unwrap();
            let got = conv2d(&x, &k, Padding::Reflect(2), stride).unwrap();
            let err = (got - want).unwrap().abs().unwrap().max_all().unwrap().to_scalar::<f64>().unwrap();
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn unfold_and_fold_are_adjoint() {
        // <im2col(x), y> == <x, col2im(y)>
        let mut init = Init::new(6);
        for reflect in [false, true] {
            let x = t(&init.uniform(2 * 2 * 5 * 6, 1.0), &[2, 2, 5, 6]);
            let u = Unfold { c: 2, h: 5, w: 6, kh: 3, kw: 3, stride: 2, pad: 1, reflect };
            let (ho, wo) = u.out_hw();
            let y = t(&init.uniform(2 * u.rows() * ho * wo, 1.0), &[u.rows(), 2 * ho * wo]);
            let lhs = (x.apply_op1(Im2Col(u)).unwrap() * &y).unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap();
            let rhs = (y.apply_op1(super::super::im2col::Col2Im(u)).unwrap() * &x).unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} {rhs}");
        }
    }

    #[test]
    fn reflect_pad_mirrors_without_edge_repeat() {
        let x = t(&[1., 2., 3.], &[1, 1, 1, 3]);
        let x = x.repeat((1, 1, 3, 1)).unwrap();
        let p = reflect_pad(&x, 2).unwrap();
        assert_eq!(p.dims(), &[1, 1, 7, 7]);
        let row: Vec<f64> = p.get(0).unwrap().get(0).unwrap().get(0).unwrap().to_vec1().unwrap();
        assert_eq!(row, vec![3., 2., 1., 2., 3., 2., 1.]);
        assert!(reflect_pad(&x, 3).is_err());
    }

    #[test]
    fn conv_parameter_count_closed_form() {
        let mut s = ParamStore::new(DType::F32);
        let mut init = Init::new(0);
        Conv2d::new(&mut s, &mut init, "c", 3, 64, 5, 1, Padding::Reflect(2), true).unwrap();
        assert_eq!(s.num_trainable(), 3 * 64 * 25 + 64);
    }

    #[test]
    fn reflect_conv_preserves_size_and_stride_halves() {
        let mut s = ParamStore::new(DType::F64);
        let mut init = Init::new(1);
        let same = Conv2d::new(&mut s, &mut init, "a", 2, 4, 5, 1, Padding::Reflect(2), true).unwrap();
        let down = Conv2d::new(&mut s, &mut init, "b", 2, 4, 3, 2, Padding::Reflect(1), true).unwrap();
        let x = Tensor::ones((1, 2, 8, 10), DType::F64, &Device::Cpu).unwrap();
        assert_eq!(same.forward(&x).unwrap().dims(), &[1, 4, 8, 10]);
        assert_eq!(down.forward(&x).unwrap().dims(), &[1, 4, 4, 5]);
    }

    #[test]
    fn prelu_and_leaky() {
        let mut s = ParamStore::new(DType::F64);
        let p = PRelu::new(&mut s, "p", 1).unwrap();
        let x = t(&[-2., 0., 3.], &[1, 1, 1, 3]);
        let y: Vec<f64> = p.forward(&x).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(y, vec![-0.5, 0., 3.]);
        let y: Vec<f64> = leaky_relu(&x, 0.2).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(y, vec![-0.4, 0., 3.]);
    }

    #[test]
    fn batchnorm_train_normalizes_and_tracks() {
        let mut s = ParamStore::new(DType::F64);
        let bn = BatchNorm2d::new(&mut s, "bn", 1).unwrap();
        let x = t(&[1., 2., 3., 4.], &[2, 1, 1, 2]);
        let y: Vec<f64> = bn.forward(&x, Mode::Train).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        let var: f64 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-4);
        let rm = s.get("bn.running_mean").unwrap().to_vec1::<f64>().unwrap()[0];
        assert!((rm - 0.25).abs() < 1e-12);
        // eval mode uses the running statistics, independent of the batch
        let a = bn.forward(&x, Mode::Eval).unwrap();
        let b = bn.forward(&x.narrow(0, 0, 1).unwrap(), Mode::Eval).unwrap();
        assert_eq!(
            a.narrow(0, 0, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap(),
            b.flatten_all().unwrap().to_vec1::<f64>().unwrap()
        );
    }
}
