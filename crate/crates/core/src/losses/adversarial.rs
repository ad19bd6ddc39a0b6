//! Relativistic average GAN objectives on raw logits.
//!
//! With `softplus(t) = log(1 + e^t)`, `−log(1 − σ(t)) = softplus(t)` and
//! `−log σ(t) = softplus(−t)`, which gives overflow-free forms of both sides.
//! Logits of any shape are averaged over every element, so patch maps count
//! each position as a sample.

use candle_core::Tensor;

use crate::error::{Error, Result};

pub fn softplus(t: &Tensor) -> Result<Tensor> {
    // max(t, 0) + log(1 + exp(−|t|))
    Ok((t.relu()? + (t.abs()?.neg()?.exp()? + 1.0)?.log()?)?)
}

fn check(c_real: &Tensor, c_fake: &Tensor) -> Result<()> {
    if c_real.elem_count() == 0 || c_fake.elem_count() == 0 {
        return Err(Error::InvalidArgument("empty logits".into()));
    }
    for t in [c_real, c_fake] {
        let finite = t
            .flatten_all()?
            .to_dtype(candle_core::DType::F64)?
            .to_vec1::<f64>()?
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite discriminator logits".into()));
        }
    }
    Ok(())
}

/// Relative logits `(C(real) − E[C(fake)], C(fake) − E[C(real)])`.
fn relativistic(c_real: &Tensor, c_fake: &Tensor) -> Result<(Tensor, Tensor)> {
    let real_rel = c_real.broadcast_sub(&c_fake.mean_all()?)?;
    let fake_rel = c_fake.broadcast_sub(&c_real.mean_all()?)?;
    Ok((real_rel, fake_rel))
}

/// `−E_real[log(1 − D(real, fake))] − E_fake[log D(fake, real)]`.
pub fn ragan_generator_loss(c_real: &Tensor, c_fake: &Tensor) -> Result<Tensor> {
    check(c_real, c_fake)?;
    let (real_rel, fake_rel) = relativistic(c_real, c_fake)?;
    Ok((softplus(&real_rel)?.mean_all()? + softplus(&fake_rel.neg()?)?.mean_all()?)?)
}

/// `−E_real[log D(real, fake)] − E_fake[log(1 − D(fake, real))]`.
pub fn ragan_discriminator_loss(c_real: &Tensor, c_fake: &Tensor) -> Result<Tensor> {
    check(c_real, c_fake)?;
    let (real_rel, fake_rel) = relativistic(c_real, c_fake)?;
    Ok((softplus(&real_rel.neg()?)?.mean_all()? + softplus(&fake_rel)?.mean_all()?)?)
}
