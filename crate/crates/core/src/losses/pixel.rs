use candle_core::Tensor;

use crate::error::{Error, Result};

fn same_dims(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Mean absolute error over every element (batch mean of per-image MAE).
pub fn content_l1(sr: &Tensor, hr: &Tensor) -> Result<Tensor> {
    same_dims(sr, hr)?;
    Ok((sr - hr)?.abs()?.mean_all()?)
}

/// L1 distance between the cycled LR reconstruction and the LR input.
pub fn cyclic_loss(lr_rec: &Tensor, lr: &Tensor) -> Result<Tensor> {
    content_l1(lr_rec, lr)
}

/// Mean absolute discrepancy of forward differences, horizontal plus vertical.
/// Differences are taken inside the image only; each map is one pixel shorter
/// along its axis.
pub fn tv_discrepancy_loss(sr: &Tensor, hr: &Tensor) -> Result<Tensor> {
    same_dims(sr, hr)?;
    let (_, _, h, w) = sr.dims4()?;
    if h < 2 || w < 2 {
        return Err(Error::Shape(format!("gradient loss needs at least 2x2, got {h}x{w}")));
    }
    let d = (sr - hr)?;
    let dh = (d.narrow(3, 1, w - 1)? - d.narrow(3, 0, w - 1)?)?;
    let dv = (d.narrow(2, 1, h - 1)? - d.narrow(2, 0, h - 1)?)?;
    Ok((dh.abs()?.mean_all()? + dv.abs()?.mean_all()?)?)
}
