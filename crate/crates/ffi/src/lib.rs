//! C interface to levelsel.
//!
//! Objects are opaque handles created by `ls_*_new`/`ls_*_load`/`ls_*_compute` and released with
//! the matching `ls_*_free`. Every fallible call returns an `LsStatus`; on failure the message is
//! available from `ls_last_error_message` on the same thread until the next failing call.
//! Buffers passed in are owned by the caller. Pixel buffers are row-major and exclude the
//! synthetic frame.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use levelsel::hierarchy::{threshold_partition, SaliencyMap};
use levelsel::image::{load_image, BorderPolicy, GrayImage};
use levelsel::pipeline::{compute_hierarchy, simplify_image};
use levelsel::Error;

pub type LsStatus = i32;

pub const LS_OK: LsStatus = 0;
/// A required pointer argument was null.
pub const LS_ERR_NULL: LsStatus = 1;
pub const LS_ERR_IO: LsStatus = 2;
/// Input bytes could not be decoded.
pub const LS_ERR_FORMAT: LsStatus = 3;
pub const LS_ERR_INVALID_ARGUMENT: LsStatus = 4;
/// A Rust panic was caught at the boundary.
pub const LS_ERR_PANIC: LsStatus = 5;
/// An internal consistency check failed.
pub const LS_ERR_INTERNAL: LsStatus = 6;

/// Grayscale image, stored with its synthetic frame if one was requested.
pub struct LsImage {
    image: GrayImage,
}

/// Saliency map on the Khalimsky grid of an image.
pub struct LsSaliency {
    map: SaliencyMap,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(LsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Unreadable { .. } | Error::Io(_) => LS_ERR_IO,
            Error::UnsupportedFormat(_) | Error::MalformedHeader(_) | Error::Codec(_) | Error::NegativeEntries => {
                LS_ERR_FORMAT
            }
            Error::ZeroDimension | Error::SizeMismatch { .. } | Error::NonFinite(_) | Error::InvalidArgument(_) => {
                LS_ERR_INVALID_ARGUMENT
            }
            Error::Invariant(_) => LS_ERR_INTERNAL,
        };
        Failure(code, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LS_OK,
        Ok(Err(Failure(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            LS_ERR_PANIC
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LS_ERR_NULL, format!("{what} is null"))
}

fn invalid(msg: String) -> Failure {
    Failure(LS_ERR_INVALID_ARGUMENT, msg)
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| invalid("path is not valid UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, needed: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < needed {
        return Err(invalid(format!("{what} holds {len} values, {needed} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

fn border(median_frame: bool) -> BorderPolicy {
    if median_frame {
        BorderPolicy::MedianFrame
    } else {
        BorderPolicy::None
    }
}

/// Message of the last failing call on this thread; empty if none. Valid until the next call
/// that fails on the same thread.
#[no_mangle]
pub extern "C" fn ls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Image from `width * height` row-major values. With `median_frame`, a one-pixel frame at the
/// border median is added before analysis.
///
/// # Safety
/// `data` must point to `width * height` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_image_new(
    width: usize,
    height: usize,
    data: *const f64,
    median_frame: bool,
    out: *mut *mut LsImage,
) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        let n = width.checked_mul(height).ok_or_else(|| invalid("image size overflows".into()))?;
        let values = std::slice::from_raw_parts(data, n).to_vec();
        let image = GrayImage::new(width, height, values)?.apply_border(border(median_frame));
        *out = Box::into_raw(Box::new(LsImage { image }));
        Ok(())
    })
}

/// Image read from a PGM or PNG file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_image_load(path: *const c_char, median_frame: bool, out: *mut *mut LsImage) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let image = load_image(path_arg(path)?, border(median_frame))?;
        *out = Box::into_raw(Box::new(LsImage { image }));
        Ok(())
    })
}

/// Width without the frame; 0 for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_image_width(img: *const LsImage) -> usize {
    img.as_ref().map_or(0, |i| i.image.width() - 2 * i.image.frame())
}

/// Height without the frame; 0 for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_image_height(img: *const LsImage) -> usize {
    img.as_ref().map_or(0, |i| i.image.height() - 2 * i.image.frame())
}

/// # Safety
/// `img` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_image_free(img: *mut LsImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Fixed-λ simplification. Writes `width * height` region means into `out` and the number of
/// regions into `regions` (may be null).
///
/// # Safety
/// `img` must be a live handle; `out` must hold `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_simplify(
    img: *const LsImage,
    lambda: f64,
    min_area: u64,
    out: *mut f64,
    out_len: usize,
    regions: *mut usize,
) -> LsStatus {
    guard(|| {
        let img = &handle(img, "img")?.image;
        let needed = (img.width() - 2 * img.frame()) * (img.height() - 2 * img.frame());
        let dst = out_slice(out, out_len, needed, "out")?;
        let (simplified, count) = simplify_image(img, None, lambda, min_area)?;
        dst.copy_from_slice(simplified.crop_frame().data());
        if !regions.is_null() {
            *regions = count;
        }
        Ok(())
    })
}

/// Saliency map of `img` after removing shapes under `min_area` pixels.
///
/// # Safety
/// `img` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_compute(img: *const LsImage, min_area: u64, out: *mut *mut LsSaliency) -> LsStatus {
    guard(|| {
        let img = &handle(img, "img")?.image;
        if out.is_null() {
            return Err(null("out"));
        }
        let h = compute_hierarchy(img, None, min_area)?;
        *out = Box::into_raw(Box::new(LsSaliency { map: h.saliency }));
        Ok(())
    })
}

/// # Safety
/// `sal` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_write(sal: *const LsSaliency, path: *const c_char) -> LsStatus {
    guard(|| {
        let sal = handle(sal, "sal")?;
        sal.map.write(path_arg(path)?)?;
        Ok(())
    })
}

/// Reads a SALIENCY file. `frame` is the number of synthetic rings the source image had
/// (1 for a median-framed image).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_read(path: *const c_char, frame: usize, out: *mut *mut LsSaliency) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let map = SaliencyMap::read(path_arg(path)?, frame)?;
        *out = Box::into_raw(Box::new(LsSaliency { map }));
        Ok(())
    })
}

/// Khalimsky grid width (2W+1, frame included); 0 for a null handle.
///
/// # Safety
/// `sal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_kwidth(sal: *const LsSaliency) -> usize {
    sal.as_ref().map_or(0, |s| s.map.grid().kwidth())
}

/// Khalimsky grid height (2H+1, frame included); 0 for a null handle.
///
/// # Safety
/// `sal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_kheight(sal: *const LsSaliency) -> usize {
    sal.as_ref().map_or(0, |s| s.map.grid().kheight())
}

/// Borrowed pointer to `kwidth * kheight` face values, valid until the handle is freed.
///
/// # Safety
/// `sal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_data(sal: *const LsSaliency) -> *const f64 {
    sal.as_ref().map_or(std::ptr::null(), |s| s.map.values().as_ptr())
}

/// Largest saliency value; 0 for a null handle.
///
/// # Safety
/// `sal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_max(sal: *const LsSaliency) -> f64 {
    sal.as_ref().map_or(0.0, |s| s.map.max())
}

/// # Safety
/// `sal` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_saliency_free(sal: *mut LsSaliency) {
    if !sal.is_null() {
        drop(Box::from_raw(sal));
    }
}

/// Partition at threshold `t`: regions are pixels joined across edges with saliency `<= t`.
/// Writes one label per pixel (frame excluded) and the region count (may be null).
///
/// # Safety
/// `sal` must be a live handle; `labels` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ls_threshold(
    sal: *const LsSaliency,
    t: f64,
    labels: *mut u32,
    len: usize,
    regions: *mut usize,
) -> LsStatus {
    guard(|| {
        let map = &handle(sal, "sal")?.map;
        if t.is_nan() || t < 0.0 {
            return Err(invalid(format!("threshold {t} must be non-negative")));
        }
        let part = threshold_partition(map, t).crop_frame();
        let dst = out_slice(labels, len, part.labels().len(), "labels")?;
        dst.copy_from_slice(part.labels());
        if !regions.is_null() {
            *regions = part.count();
        }
        Ok(())
    })
}
