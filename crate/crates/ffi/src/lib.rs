//! C ABI for the thumbnail-compression image repair pipeline.
//!
//! Every entry point returns a [`CdnetStatus`]; results come back through
//! out pointers. Handles are opaque: create them with the constructors
//! here and release them with the matching `_free`. On failure the
//! function stores a message retrievable with [`cdnet_last_error`]
//! (thread local, valid until the next failing call on the same thread).
//!
//! Every boundary catches panics and reports them as
//! [`CdnetStatus::Panic`] instead of unwinding into the caller.
//!
//! The build script regenerates `include/cdnet.h` from this file.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cdnet::decompression::{decompress, DecompressMode, ReferencePack};
use cdnet::imageio;
use cdnet::masks::{edge_mask, irregular_mask, rect_mask, MaskSide};
use cdnet::network::Network;
use cdnet::tensor::Tensor;
use cdnet::trainer::load_network;
use cdnet::Error;

/// Result code returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdnetStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was malformed (bad mode, bad fraction, bad UTF-8, ...).
    InvalidArgument = 2,
    /// Tensor dimensions did not line up.
    ShapeMismatch = 3,
    /// A computation produced NaN or infinity.
    NonFinite = 4,
    /// The filesystem said no.
    Io = 5,
    /// An image file could not be decoded or encoded.
    Image = 6,
    /// A checkpoint file was missing, truncated, or corrupt.
    Checkpoint = 7,
    /// A run configuration was invalid.
    Config = 8,
    /// Training-specific state was invalid.
    Training = 9,
    /// The caller's buffer is too small for the requested copy.
    BufferTooSmall = 10,
    /// The library panicked; see `cdnet_last_error` for details.
    Panic = 11,
}

/// Restoration strategy for [`cdnet_decompress`] and [`cdnet_inpaint`].
///
/// Any value other than the two constants below is rejected with
/// `InvalidArgument`, so garbage cannot select a strategy by accident.
#[repr(transparent)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdnetMode(pub u32);

/// Similar-texture selection plus threshold blending.
pub const CDNET_MODE_SELECTION: CdnetMode = CdnetMode(0);
/// Plain bilinear upscale of the thumbnail; references are ignored.
pub const CDNET_MODE_BASELINE: CdnetMode = CdnetMode(1);

/// Opaque image handle: one batch entry, three channels for color
/// images, one channel for masks. Values live in `[0, 1]`.
pub struct CdnetImage {
    tensor: Tensor,
}

/// Opaque handle to a trained repair network.
pub struct CdnetNetwork {
    net: Network,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    // Interior NULs would truncate the C string; scrub them.
    let clean: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(err: &Error) -> CdnetStatus {
    match err {
        Error::ShapeMismatch(_) => CdnetStatus::ShapeMismatch,
        Error::InvalidArgument(_) => CdnetStatus::InvalidArgument,
        Error::NonFinite(_) => CdnetStatus::NonFinite,
        Error::Io { .. } => CdnetStatus::Io,
        Error::Image { .. } => CdnetStatus::Image,
        Error::Checkpoint(_) => CdnetStatus::Checkpoint,
        Error::Config(_) => CdnetStatus::Config,
        Error::Training(_) => CdnetStatus::Training,
    }
}

/// A failure crossing the boundary: either a library error or a
/// condition only the ABI layer can detect (null pointer, short buffer).
enum Fail {
    Core(Error),
    Direct(CdnetStatus, String),
}

impl From<Error> for Fail {
    fn from(err: Error) -> Fail {
        Fail::Core(err)
    }
}

fn fail(status: CdnetStatus, msg: impl Into<String>) -> Fail {
    Fail::Direct(status, msg.into())
}

/// Runs a fallible body, converting errors and panics into status codes.
fn boundary(body: impl FnOnce() -> Result<(), Fail>) -> CdnetStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CdnetStatus::Ok,
        Ok(Err(Fail::Core(err))) => {
            set_last_error(&err.to_string());
            status_of(&err)
        }
        Ok(Err(Fail::Direct(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic across the C boundary".to_string());
            set_last_error(&msg);
            CdnetStatus::Panic
        }
    }
}

unsafe fn want<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref()
        .ok_or_else(|| fail(CdnetStatus::NullArgument, format!("{what} is null")))
}

unsafe fn want_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(fail(CdnetStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(CdnetStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Checks an out pointer and clears it so failures never leave garbage.
unsafe fn want_out<'a, T>(out: *mut *mut T, what: &str) -> Result<&'a mut *mut T, Fail> {
    let slot = out
        .as_mut()
        .ok_or_else(|| fail(CdnetStatus::NullArgument, format!("{what} is null")))?;
    *slot = ptr::null_mut();
    Ok(slot)
}

fn give<T>(slot: &mut *mut T, value: T) {
    *slot = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cdnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread.
///
/// The pointer stays valid until the next failing call on the same
/// thread. Never returns null; before any failure it is the empty string.
#[no_mangle]
pub extern "C" fn cdnet_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads a PNG as a 256 x 256 RGB image, resizing if needed.
///
/// On success `*out` owns the image; release it with `cdnet_image_free`.
#[no_mangle]
pub unsafe extern "C" fn cdnet_image_load(
    path: *const c_char,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let path = want_str(path, "path")?;
        let tensor = imageio::load_image(Path::new(path))?;
        give(slot, CdnetImage { tensor });
        Ok(())
    })
}

/// Loads a PNG as an RGB image at an arbitrary square size.
#[no_mangle]
pub unsafe extern "C" fn cdnet_image_load_sized(
    path: *const c_char,
    size: usize,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let path = want_str(path, "path")?;
        let tensor = imageio::load_image_sized(Path::new(path), size)?;
        give(slot, CdnetImage { tensor });
        Ok(())
    })
}

/// Loads a grayscale PNG as a binary single-channel mask
/// (1 = pixel present, 0 = pixel missing).
#[no_mangle]
pub unsafe extern "C" fn cdnet_mask_load(
    path: *const c_char,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let path = want_str(path, "path")?;
        let tensor = imageio::load_mask(Path::new(path))?;
        give(slot, CdnetImage { tensor });
        Ok(())
    })
}

/// Saves an image as a PNG. Three-channel handles are written as RGB,
/// single-channel handles as binary grayscale masks.
#[no_mangle]
pub unsafe extern "C" fn cdnet_image_save(
    image: *const CdnetImage,
    path: *const c_char,
) -> CdnetStatus {
    boundary(|| {
        let image = want(image, "image")?;
        let path = want_str(path, "path")?;
        if image.tensor.c() == 1 {
            imageio::save_mask(&image.tensor, Path::new(path))?;
        } else {
            imageio::save_image(&image.tensor, Path::new(path))?;
        }
        Ok(())
    })
}

/// Builds an image from planar float data: `3 * height * width` values
/// in channel-major order (all red rows, then green, then blue),
/// each in `[0, 1]`.
#[no_mangle]
pub unsafe extern "C" fn cdnet_image_from_rgb(
    data: *const f32,
    height: usize,
    width: usize,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        if data.is_null() {
            return Err(fail(CdnetStatus::NullArgument, "data is null"));
        }
        if height == 0 || width == 0 {
            return Err(fail(
                CdnetStatus::InvalidArgument,
                format!("image dimensions must be positive, got {height} x {width}"),
            ));
        }
        let values = std::slice::from_raw_parts(data, 3 * height * width);
        let mut tensor = Tensor::zeros([1, 3, height, width]);
        tensor.data_mut().copy_from_slice(values);
        if !tensor.all_finite() {
            return Err(fail(CdnetStatus::NonFinite, "image data contains NaN or infinity"));
        }
        give(slot, CdnetImage { tensor });
        Ok(())
    })
}

/// Copies an image's planar float data into `buffer`.
///
/// `len` is the buffer capacity in floats; `channels * height * width`
/// are required (3 per pixel for color images, 1 for masks).
#[no_mangle]
pub unsafe extern "C" fn cdnet_image_to_rgb(
    image: *const CdnetImage,
    buffer: *mut f32,
    len: usize,
) -> CdnetStatus {
    boundary(|| {
        let image = want(image, "image")?;
        if buffer.is_null() {
            return Err(fail(CdnetStatus::NullArgument, "buffer is null"));
        }
        let needed = image.tensor.numel();
        if len < needed {
            return Err(fail(
                CdnetStatus::BufferTooSmall,
                format!("buffer holds {len} floats, image needs {needed}"),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, needed).copy_from_slice(image.tensor.data());
        Ok(())
    })
}

/// Reports an image's channel count, height, and width.
#[no_mangle]
pub unsafe extern "C" fn cdnet_image_dims(
    image: *const CdnetImage,
    channels: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> CdnetStatus {
    boundary(|| {
        let image = want(image, "image")?;
        for (ptr, what) in [(channels, "channels"), (height, "height"), (width, "width")] {
            if ptr.is_null() {
                return Err(fail(CdnetStatus::NullArgument, format!("{what} is null")));
            }
        }
        let [_, c, h, w] = image.tensor.shape();
        *channels = c;
        *height = h;
        *width = w;
        Ok(())
    })
}

/// Releases an image handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cdnet_image_free(image: *mut CdnetImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Builds a mask that removes a band along one border.
///
/// `side` is one of `"left"`, `"right"`, `"top"`, `"bottom"`;
/// `fraction` in `[0, 1]` is the share of the image the band covers.
#[no_mangle]
pub unsafe extern "C" fn cdnet_mask_edge(
    side: *const c_char,
    fraction: f64,
    height: usize,
    width: usize,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let side = MaskSide::parse(want_str(side, "side")?)?;
        let tensor = edge_mask(side, fraction, height, width)?;
        give(slot, CdnetImage { tensor });
        Ok(())
    })
}

/// Builds a mask that removes the rectangle
/// `[y0, y0 + hole_height) x [x0, x0 + hole_width)`.
#[no_mangle]
pub unsafe extern "C" fn cdnet_mask_rect(
    x0: usize,
    y0: usize,
    hole_height: usize,
    hole_width: usize,
    height: usize,
    width: usize,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let tensor = rect_mask(x0, y0, hole_height, hole_width, height, width)?;
        give(slot, CdnetImage { tensor });
        Ok(())
    })
}

/// Builds a reproducible free-form stroke mask covering roughly
/// `fraction` of the image. The same seed always yields the same mask.
#[no_mangle]
pub unsafe extern "C" fn cdnet_mask_irregular(
    seed: u64,
    fraction: f64,
    height: usize,
    width: usize,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let tensor = irregular_mask(seed, fraction, height, width)?;
        give(slot, CdnetImage { tensor });
        Ok(())
    })
}

/// Loads a trained network from a checkpoint file.
///
/// On success `*out` owns the network; release it with
/// `cdnet_network_free`. Optimizer state in the checkpoint is ignored.
#[no_mangle]
pub unsafe extern "C" fn cdnet_network_load(
    path: *const c_char,
    out: *mut *mut CdnetNetwork,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let path = want_str(path, "path")?;
        let (net, _optimizer) = load_network(Path::new(path))?;
        give(slot, CdnetNetwork { net });
        Ok(())
    })
}

/// Releases a network handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cdnet_network_free(network: *mut CdnetNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Reports how many trainable parameters the network holds.
#[no_mangle]
pub unsafe extern "C" fn cdnet_network_param_count(
    network: *const CdnetNetwork,
    count: *mut usize,
) -> CdnetStatus {
    boundary(|| {
        let network = want(network, "network")?;
        if count.is_null() {
            return Err(fail(CdnetStatus::NullArgument, "count is null"));
        }
        *count = network.net.param_count();
        Ok(())
    })
}

/// Zeroes the missing pixels of `image` under `mask` (1 = present).
fn zero_holes(image: &Tensor, mask: &Tensor) -> Result<Tensor, Error> {
    let [n, c, h, w] = image.shape();
    if mask.shape() != [n, 1, h, w] {
        return Err(Error::ShapeMismatch(format!(
            "mask {:?} does not match image {:?}",
            mask.shape(),
            image.shape()
        )));
    }
    let plane = h * w;
    let mut out = image.clone();
    for b in 0..n {
        let m = &mask.data()[b * plane..(b + 1) * plane];
        for ch in 0..c {
            let base = (b * c + ch) * plane;
            for (i, v) in out.data_mut()[base..base + plane].iter_mut().enumerate() {
                *v *= m[i];
            }
        }
    }
    Ok(out)
}

/// Compresses a damaged image into a repaired thumbnail at one eighth
/// of the input resolution.
///
/// Pixels missing under `mask` are zeroed before inference, so the
/// hole contents need not be meaningful.
#[no_mangle]
pub unsafe extern "C" fn cdnet_compress(
    network: *const CdnetNetwork,
    image: *const CdnetImage,
    mask: *const CdnetImage,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let network = want(network, "network")?;
        let image = want(image, "image")?;
        let mask = want(mask, "mask")?;
        let damaged = zero_holes(&image.tensor, &mask.tensor)?;
        let thumb = network.net.infer(&damaged, &mask.tensor)?;
        give(slot, CdnetImage { tensor: thumb });
        Ok(())
    })
}

fn mode_of(mode: CdnetMode) -> Result<DecompressMode, Fail> {
    match mode {
        CDNET_MODE_SELECTION => Ok(DecompressMode::Selection),
        CDNET_MODE_BASELINE => Ok(DecompressMode::Baseline),
        CdnetMode(other) => Err(fail(
            CdnetStatus::InvalidArgument,
            format!("unknown mode {other}, expected CDNET_MODE_SELECTION or CDNET_MODE_BASELINE"),
        )),
    }
}

fn build_pack(
    damaged: Option<&CdnetImage>,
    mask: Option<&CdnetImage>,
    truth: Option<&CdnetImage>,
    mode: DecompressMode,
) -> Result<Option<ReferencePack>, Fail> {
    match mode {
        DecompressMode::Baseline => {
            if truth.is_some() {
                return Err(fail(
                    CdnetStatus::InvalidArgument,
                    "baseline mode ignores references, pass null truth",
                ));
            }
            Ok(None)
        }
        DecompressMode::Selection => {
            let damaged = damaged
                .ok_or_else(|| fail(CdnetStatus::NullArgument, "selection mode needs damaged"))?;
            let mask = mask
                .ok_or_else(|| fail(CdnetStatus::NullArgument, "selection mode needs mask"))?;
            let pack = match truth {
                Some(truth) => {
                    ReferencePack::from_truth(&truth.tensor, &damaged.tensor, &mask.tensor)?
                }
                None => ReferencePack::from_damaged(&damaged.tensor, &mask.tensor)?,
            };
            Ok(Some(pack))
        }
    }
}

/// Restores a full-resolution image from a repaired thumbnail.
///
/// Selection mode requires `damaged` and `mask`; `truth` is optional and
/// supplies cleaner references when the original is at hand. Baseline
/// mode upscales the thumbnail alone and rejects a non-null `truth`.
/// `threshold` controls how aggressively known pixels overwrite the
/// selected texture (0 keeps the pure selection).
#[no_mangle]
pub unsafe extern "C" fn cdnet_decompress(
    thumbnail: *const CdnetImage,
    damaged: *const CdnetImage,
    mask: *const CdnetImage,
    truth: *const CdnetImage,
    mode: CdnetMode,
    threshold: f64,
    out: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out, "out")?;
        let thumbnail = want(thumbnail, "thumbnail")?;
        let mode = mode_of(mode)?;
        let pack = build_pack(damaged.as_ref(), mask.as_ref(), truth.as_ref(), mode)?;
        let restored = decompress(&thumbnail.tensor, pack.as_ref(), mode, threshold)?;
        give(slot, CdnetImage { tensor: restored });
        Ok(())
    })
}

/// Repairs a damaged image end to end: compress to a thumbnail, then
/// restore full resolution. Equivalent to `cdnet_compress` followed by
/// `cdnet_decompress` with the same image as the damaged reference.
///
/// `truth` is optional (selection mode only, see `cdnet_decompress`).
/// If `out_thumbnail` is non-null it receives the intermediate
/// thumbnail as a separately owned handle.
#[no_mangle]
pub unsafe extern "C" fn cdnet_inpaint(
    network: *const CdnetNetwork,
    image: *const CdnetImage,
    mask: *const CdnetImage,
    truth: *const CdnetImage,
    mode: CdnetMode,
    threshold: f64,
    out_restored: *mut *mut CdnetImage,
    out_thumbnail: *mut *mut CdnetImage,
) -> CdnetStatus {
    boundary(|| {
        let slot = want_out(out_restored, "out_restored")?;
        let thumb_slot = if out_thumbnail.is_null() {
            None
        } else {
            Some(want_out(out_thumbnail, "out_thumbnail")?)
        };
        let network = want(network, "network")?;
        let image = want(image, "image")?;
        let mask = want(mask, "mask")?;
        let mode = mode_of(mode)?;

        let damaged = CdnetImage {
            tensor: zero_holes(&image.tensor, &mask.tensor)?,
        };
        let thumb = network.net.infer(&damaged.tensor, &mask.tensor)?;
        let pack = build_pack(Some(&damaged), Some(mask), truth.as_ref(), mode)?;
        let restored = decompress(&thumb, pack.as_ref(), mode, threshold)?;

        give(slot, CdnetImage { tensor: restored });
        if let Some(thumb_slot) = thumb_slot {
            give(thumb_slot, CdnetImage { tensor: thumb });
        }
        Ok(())
    })
}
