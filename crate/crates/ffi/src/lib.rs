//! C ABI for `ggmm-sr`.
//!
//! Images and models are opaque heap handles created by `*_new`, `*_load`,
//! `*_train` and friends and released with the matching `*_free`. Every
//! fallible function returns a [`GgmmStatus`]; on failure a message is kept
//! per thread and can be read with [`ggmm_last_error_message`].
//!
//! Handles are not synchronized: one handle must not be used from two threads
//! at once, but distinct handles may be.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ggmm_sr::imaging::{degrade, load_image, psnr, save_image, upsample_nearest};
use ggmm_sr::pipeline::{super_resolve, train};
use ggmm_sr::{EmConfig, Error, GrayImage, JointModel, PatchGeometry};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgmmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Bad argument or configuration value, or too little data.
    InvalidArgument = 2,
    /// Unreadable or malformed image.
    Image = 3,
    /// Model file failed to parse or validate.
    Model = 4,
    /// Filesystem error.
    Io = 5,
    /// Factorization or other numerical failure.
    Numerical = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Opaque grayscale image with values in `[0, 1]`.
pub struct GgmmImage(GrayImage);

/// Opaque trained joint patch model.
pub struct GgmmModel(JointModel);

/// Training parameters. Obtain defaults from [`ggmm_train_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GgmmTrainConfig {
    /// LR patch side.
    pub tau: usize,
    /// Magnification factor.
    pub q: usize,
    pub stride_train: usize,
    pub stride_recon: usize,
    /// Aggregation window decay.
    pub gamma: f64,
    /// Number of mixture components.
    pub components: usize,
    pub max_outer_iters: usize,
    pub fp_inner_iters: usize,
    pub rel_tol: f64,
    /// Covariance ridge; negative selects the data-scaled default.
    pub cov_reg: f64,
    /// Fixed shape parameter; zero or negative leaves the shape free.
    pub fix_beta: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: GgmmStatus, msg: impl Into<String>) -> GgmmStatus {
    set_last_error(msg.into());
    status
}

fn status_of(e: &Error) -> GgmmStatus {
    match e {
        Error::DimensionMismatch { .. }
        | Error::Domain(_)
        | Error::InvalidConfig(_)
        | Error::InsufficientData(_) => GgmmStatus::InvalidArgument,
        Error::Image(_) | Error::UnsupportedFormat(_) => GgmmStatus::Image,
        Error::Model(_) | Error::Json(_) => GgmmStatus::Model,
        Error::Io { .. } => GgmmStatus::Io,
        Error::NotSpd(_) | Error::Numerical(_) | Error::Uncovered { .. } => GgmmStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), GgmmStatus>) -> GgmmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GgmmStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(GgmmStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, GgmmStatus>;
}

impl<T> OrStatus<T> for ggmm_sr::Result<T> {
    fn or_status(self) -> Result<T, GgmmStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, GgmmStatus> {
    p.as_ref().ok_or_else(|| fail(GgmmStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, GgmmStatus> {
    p.as_mut().ok_or_else(|| fail(GgmmStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, GgmmStatus> {
    if p.is_null() {
        return Err(fail(GgmmStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(GgmmStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the most recent failure on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ggmm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ggmm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an image from `width * height` row-major values.
///
/// # Safety
/// `pixels` must point to `width * height` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_image_new(
    width: usize,
    height: usize,
    pixels: *const f64,
    out: *mut *mut GgmmImage,
) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if pixels.is_null() {
            return Err(fail(GgmmStatus::NullPointer, "pixels is null"));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| fail(GgmmStatus::InvalidArgument, "image size overflows"))?;
        let data = std::slice::from_raw_parts(pixels, n).to_vec();
        *out = boxed(GgmmImage(GrayImage::new(width, height, data).or_status()?));
        Ok(())
    })
}

/// Reads an 8-bit PGM (P2 or P5) file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_image_load(path: *const c_char, out: *mut *mut GgmmImage) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = path_arg(path)?;
        *out = boxed(GgmmImage(load_image(path).or_status()?));
        Ok(())
    })
}

/// Writes a binary 8-bit PGM.
///
/// # Safety
/// `image` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ggmm_image_save(image: *const GgmmImage, path: *const c_char) -> GgmmStatus {
    guard(|| {
        let image = deref(image, "image")?;
        save_image(&image.0, path_arg(path)?).or_status()
    })
}

/// Width in pixels, 0 for a null handle.
///
/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ggmm_image_width(image: *const GgmmImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// Height in pixels, 0 for a null handle.
///
/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ggmm_image_height(image: *const GgmmImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Copies the row-major pixel values into `dst`, which holds `len` doubles;
/// `len` must equal width * height.
///
/// # Safety
/// `image` must be a live handle and `dst` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ggmm_image_copy_pixels(image: *const GgmmImage, dst: *mut f64, len: usize) -> GgmmStatus {
    guard(|| {
        let image = deref(image, "image")?;
        if dst.is_null() {
            return Err(fail(GgmmStatus::NullPointer, "dst is null"));
        }
        let px = image.0.pixels();
        if len != px.len() {
            return Err(fail(
                GgmmStatus::InvalidArgument,
                format!("buffer holds {len} values, image has {}", px.len()),
            ));
        }
        std::slice::from_raw_parts_mut(dst, len).copy_from_slice(px);
        Ok(())
    })
}

/// Releases an image. Null is ignored.
///
/// # Safety
/// `image` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ggmm_image_free(image: *mut GgmmImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Block-averages by `q` and adds Gaussian noise of standard deviation
/// `noise_sigma` drawn from `seed`.
///
/// # Safety
/// `hr` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_degrade(
    hr: *const GgmmImage,
    q: usize,
    noise_sigma: f64,
    seed: u64,
    out: *mut *mut GgmmImage,
) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let hr = deref(hr, "hr")?;
        *out = boxed(GgmmImage(degrade(&hr.0, q, noise_sigma, seed).or_status()?));
        Ok(())
    })
}

/// Pixel replication by `q`.
///
/// # Safety
/// `lr` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_upsample_nearest(lr: *const GgmmImage, q: usize, out: *mut *mut GgmmImage) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let lr = deref(lr, "lr")?;
        *out = boxed(GgmmImage(upsample_nearest(&lr.0, q).or_status()?));
        Ok(())
    })
}

/// PSNR in dB; `+inf` for identical images.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_psnr(a: *const GgmmImage, b: *const GgmmImage, peak: f64, out: *mut f64) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        *out = psnr(&a.0, &b.0, peak).or_status()?.db();
        Ok(())
    })
}

/// Default training parameters.
#[no_mangle]
pub extern "C" fn ggmm_train_config_default() -> GgmmTrainConfig {
    let g = PatchGeometry::default();
    let e = EmConfig::default();
    GgmmTrainConfig {
        tau: g.tau,
        q: g.q,
        stride_train: g.stride_train,
        stride_recon: g.stride_recon,
        gamma: g.gamma,
        components: e.components,
        max_outer_iters: e.max_outer_iters,
        fp_inner_iters: e.fp_inner_iters,
        rel_tol: e.rel_tol,
        cov_reg: -1.0,
        fix_beta: 0.0,
        seed: e.seed,
    }
}

impl GgmmTrainConfig {
    fn split(&self) -> (PatchGeometry, EmConfig) {
        let geom = PatchGeometry {
            tau: self.tau,
            q: self.q,
            stride_train: self.stride_train,
            stride_recon: self.stride_recon,
            gamma: self.gamma,
        };
        let em = EmConfig {
            components: self.components,
            max_outer_iters: self.max_outer_iters,
            fp_inner_iters: self.fp_inner_iters,
            rel_tol: self.rel_tol,
            cov_reg: (self.cov_reg >= 0.0).then_some(self.cov_reg),
            fix_beta: (self.fix_beta > 0.0).then_some(self.fix_beta),
            seed: self.seed,
            ..EmConfig::default()
        };
        (geom, em)
    }
}

/// Trains a joint model on a full HR/LR pair (no cropping). `config` may be
/// null for defaults. If `final_nll` is non-null it receives the last mean
/// negative log-likelihood.
///
/// # Safety
/// `hr` and `lr` must be live handles, `config` null or readable, `out`
/// writable, `final_nll` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_model_train(
    hr: *const GgmmImage,
    lr: *const GgmmImage,
    config: *const GgmmTrainConfig,
    out: *mut *mut GgmmModel,
    final_nll: *mut f64,
) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (hr, lr) = (deref(hr, "hr")?, deref(lr, "lr")?);
        let cfg = config.as_ref().copied().unwrap_or_else(|| ggmm_train_config_default());
        let (geom, em) = cfg.split();
        let (model, report) = train(&hr.0, &lr.0, &geom, &em).or_status()?;
        if let Some(nll) = final_nll.as_mut() {
            *nll = report.final_nll();
        }
        *out = boxed(GgmmModel(model));
        Ok(())
    })
}

/// Reads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_model_load(path: *const c_char, out: *mut *mut GgmmModel) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(GgmmModel(JointModel::load(path_arg(path)?).or_status()?));
        Ok(())
    })
}

/// Writes a model JSON file.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ggmm_model_save(model: *const GgmmModel, path: *const c_char) -> GgmmStatus {
    guard(|| {
        let model = deref(model, "model")?;
        model.0.save(path_arg(path)?).or_status()
    })
}

/// Number of mixture components, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ggmm_model_components(model: *const GgmmModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.ggmm().len())
}

/// Copies the component shape parameters into `dst` (`len` must equal the
/// component count).
///
/// # Safety
/// `model` must be a live handle and `dst` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ggmm_model_betas(model: *const GgmmModel, dst: *mut f64, len: usize) -> GgmmStatus {
    guard(|| {
        let model = deref(model, "model")?;
        if dst.is_null() {
            return Err(fail(GgmmStatus::NullPointer, "dst is null"));
        }
        let comps = model.0.ggmm().components();
        if len != comps.len() {
            return Err(fail(
                GgmmStatus::InvalidArgument,
                format!("buffer holds {len} values, model has {} components", comps.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(dst, len);
        for (d, c) in dst.iter_mut().zip(comps) {
            *d = c.beta();
        }
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ggmm_model_free(model: *mut GgmmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Reconstructs an HR image of `q` times the LR size.
///
/// # Safety
/// `lr` and `model` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ggmm_super_resolve(
    lr: *const GgmmImage,
    model: *const GgmmModel,
    out: *mut *mut GgmmImage,
) -> GgmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (lr, model) = (deref(lr, "lr")?, deref(model, "model")?);
        *out = boxed(GgmmImage(super_resolve(&lr.0, &model.0).or_status()?));
        Ok(())
    })
}
