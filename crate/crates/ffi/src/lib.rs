//! C ABI over the `srrescycgan` library.
//!
//! Images cross the boundary as planar `float` buffers (`C×H×W`, row-major,
//! values in `[0, 1]`). Every fallible call returns an [`SrcycStatus`]; on
//! failure `srcyc_last_error_message` describes the error for the calling
//! thread. Panics are caught and reported as `SRCYC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use srrescycgan::degradation::{degrade, DegradationSpec, JpegQuality};
use srrescycgan::metrics::{psnr, ssim};
use srrescycgan::training::estimate_noise_sigma;
use srrescycgan::{Error, Image, SuperResolver};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrcycStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Checkpoint = 4,
    Shape = 5,
    Internal = 6,
    Panic = 7,
}

/// Opaque handle to a loaded SR generator.
pub struct SrcycModel {
    inner: SuperResolver,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SrcycStatus {
    match e {
        Error::FileNotFound(_) | Error::Io(_) | Error::Codec(_) | Error::Csv(_) => SrcycStatus::Io,
        Error::UnsupportedBitDepth { .. } | Error::UnsupportedFormat { .. } => SrcycStatus::Io,
        Error::Checkpoint(_) => SrcycStatus::Checkpoint,
        Error::Shape(_) => SrcycStatus::Shape,
        Error::InvalidArgument(_) | Error::OutOfRange { .. } | Error::Config(_) | Error::EmptyDataset => {
            SrcycStatus::InvalidArgument
        }
        _ => SrcycStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SrcycStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SrcycStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            SrcycStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            SrcycStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SrcycStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &'static str) -> Result<*const T, Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(p)
    }
}

unsafe fn read_image(data: *const f32, channels: usize, height: usize, width: usize) -> Result<Image, Failure> {
    let data = non_null(data, "image data")?;
    let n = channels
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .ok_or_else(|| Failure::Invalid("image dimensions overflow".into()))?;
    if n == 0 {
        return Err(Failure::Invalid(format!("empty image {channels}x{height}x{width}")));
    }
    let v = unsafe { std::slice::from_raw_parts(data, n) }.to_vec();
    Ok(Image::new(channels, height, width, v)?)
}

unsafe fn write_image(img: &Image, out: *mut f32, out_len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("output buffer"));
    }
    if out_len < img.len() {
        return Err(Failure::Invalid(format!("output buffer holds {out_len} floats, {} needed", img.len())));
    }
    unsafe { ptr::copy_nonoverlapping(img.data().as_ptr(), out, img.len()) };
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("output pointer"));
    }
    unsafe { out.write(v) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn srcyc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn srcyc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads the SR generator from a training checkpoint. On success `*out` owns a
/// handle to release with `srcyc_model_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srcyc_model_load(path: *const c_char, out: *mut *mut SrcycModel) -> SrcycStatus {
    guard(|| {
        let path = non_null(path, "path")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Failure::Invalid("path is not UTF-8".into()))?;
        let model = Box::new(SrcycModel { inner: SuperResolver::load(path)? });
        unsafe { out.write(Box::into_raw(model)) };
        Ok(())
    })
}

/// Releases a handle from `srcyc_model_load`. Null is ignored.
///
/// # Safety
/// `model` must come from `srcyc_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srcyc_model_free(model: *mut SrcycModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Upscaling factor of the loaded model.
///
/// # Safety
/// `model` must be a live handle and `scale` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srcyc_model_scale(model: *const SrcycModel, scale: *mut usize) -> SrcycStatus {
    guard(|| {
        let m = unsafe { &*non_null(model, "model")? };
        unsafe { write_out(scale, m.inner.scale()) }
    })
}

/// Super-resolves a `channels×height×width` image into `out`, which must hold
/// `channels·(scale·height)·(scale·width)` floats. A nonzero `ensemble`
/// averages over the 8 flips/rotations.
///
/// # Safety
/// `data` must point to `channels·height·width` floats and `out` to `out_len`.
#[no_mangle]
pub unsafe extern "C" fn srcyc_super_resolve(
    model: *const SrcycModel,
    data: *const f32,
    channels: usize,
    height: usize,
    width: usize,
    ensemble: bool,
    out: *mut f32,
    out_len: usize,
) -> SrcycStatus {
    guard(|| {
        let m = unsafe { &*non_null(model, "model")? };
        let lr = unsafe { read_image(data, channels, height, width)? };
        let sr = if ensemble { m.inner.super_resolve_ensemble(&lr)? } else { m.inner.super_resolve(&lr)? };
        unsafe { write_image(&sr, out, out_len) }
    })
}

/// Noise standard deviation estimate in 8-bit units.
///
/// # Safety
/// `data` must point to `channels·height·width` floats.
#[no_mangle]
pub unsafe extern "C" fn srcyc_estimate_noise_sigma(
    data: *const f32,
    channels: usize,
    height: usize,
    width: usize,
    sigma: *mut f64,
) -> SrcycStatus {
    guard(|| {
        let img = unsafe { read_image(data, channels, height, width)? };
        unsafe { write_out(sigma, estimate_noise_sigma(&img)) }
    })
}

/// PSNR in dB with peak 1.0; identical images give +infinity.
///
/// # Safety
/// `a` and `b` must each point to `channels·height·width` floats.
#[no_mangle]
pub unsafe extern "C" fn srcyc_psnr(
    a: *const f32,
    b: *const f32,
    channels: usize,
    height: usize,
    width: usize,
    value: *mut f64,
) -> SrcycStatus {
    guard(|| {
        let (a, b) = unsafe { (read_image(a, channels, height, width)?, read_image(b, channels, height, width)?) };
        unsafe { write_out(value, psnr(&a, &b)?) }
    })
}

/// Mean SSIM over channels.
///
/// # Safety
/// `a` and `b` must each point to `channels·height·width` floats.
#[no_mangle]
pub unsafe extern "C" fn srcyc_ssim(
    a: *const f32,
    b: *const f32,
    channels: usize,
    height: usize,
    width: usize,
    value: *mut f64,
) -> SrcycStatus {
    guard(|| {
        let (a, b) = unsafe { (read_image(a, channels, height, width)?, read_image(b, channels, height, width)?) };
        unsafe { write_out(value, ssim(&a, &b)?) }
    })
}

/// Bicubic downsample by `scale`, Gaussian noise of `sigma` (8-bit units) and
/// JPEG at `jpeg_quality` (0 disables it). `out` must hold
/// `channels·(height/scale)·(width/scale)` floats.
///
/// # Safety
/// `data` must point to `channels·height·width` floats and `out` to `out_len`.
#[no_mangle]
pub unsafe extern "C" fn srcyc_degrade(
    data: *const f32,
    channels: usize,
    height: usize,
    width: usize,
    scale: usize,
    sigma: f64,
    jpeg_quality: u8,
    seed: u64,
    out: *mut f32,
    out_len: usize,
) -> SrcycStatus {
    guard(|| {
        let hr = unsafe { read_image(data, channels, height, width)? };
        let jpeg_quality = if jpeg_quality == 0 { JpegQuality::Off } else { JpegQuality::Quality(jpeg_quality) };
        let spec = DegradationSpec { scale, noise_sigma: sigma, jpeg_quality, seed };
        let lr = degrade(&hr, &spec)?;
        unsafe { write_image(&lr, out, out_len) }
    })
}
