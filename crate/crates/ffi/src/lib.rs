//! C ABI over the perturbshield defenses.
//!
//! Every function returns a [`PsStatus`]. On failure a description is kept
//! per thread and can be read with [`ps_last_error_message`]. Rasters cross the
//! boundary as opaque [`PsRaster`] handles owned by the caller and released
//! with [`ps_raster_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use perturbshield::codec::jpeg_roundtrip;
use perturbshield::edge::{canny_auto_with, EdgeMap};
use perturbshield::pipeline::{defend, luminance, Defense, PipelineConfig};
use perturbshield::quantize::bit_depth_reduce;
use perturbshield::raster::{load, save};
use perturbshield::smooth::{gaussian_blur, median_blur};
use perturbshield::{ColorSpace, Error, Raster};

/// Longest kernel set a [`PsConfig`] can carry.
pub const PS_MAX_KERNELS: usize = 16;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    Io = 2,
    UnsupportedFormat = 3,
    InvalidDimensions = 4,
    InvalidParameter = 5,
    ChannelMismatch = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsColorSpace {
    Rgb = 0,
    Gray = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsDefense {
    AdaptiveGaussian = 0,
    AdaptiveGk = 1,
    FastAdaptiveGk = 2,
    GkMeans = 3,
    FastGkMeans = 4,
    Kmeans = 5,
    BitDepth = 6,
    Jpeg = 7,
    Median = 8,
    Gaussian = 9,
    None = 10,
}

impl From<PsDefense> for Defense {
    fn from(d: PsDefense) -> Self {
        match d {
            PsDefense::AdaptiveGaussian => Defense::AdaptiveGaussian,
            PsDefense::AdaptiveGk => Defense::AdaptiveGk,
            PsDefense::FastAdaptiveGk => Defense::FastAdaptiveGk,
            PsDefense::GkMeans => Defense::GkMeans,
            PsDefense::FastGkMeans => Defense::FastGkMeans,
            PsDefense::Kmeans => Defense::Kmeans,
            PsDefense::BitDepth => Defense::BitDepth,
            PsDefense::Jpeg => Defense::Jpeg,
            PsDefense::Median => Defense::Median,
            PsDefense::Gaussian => Defense::Gaussian,
            PsDefense::None => Defense::None,
        }
    }
}

impl From<Defense> for PsDefense {
    fn from(d: Defense) -> Self {
        match d {
            Defense::AdaptiveGaussian => PsDefense::AdaptiveGaussian,
            Defense::AdaptiveGk => PsDefense::AdaptiveGk,
            Defense::FastAdaptiveGk => PsDefense::FastAdaptiveGk,
            Defense::GkMeans => PsDefense::GkMeans,
            Defense::FastGkMeans => PsDefense::FastGkMeans,
            Defense::Kmeans => PsDefense::Kmeans,
            Defense::BitDepth => PsDefense::BitDepth,
            Defense::Jpeg => PsDefense::Jpeg,
            Defense::Median => PsDefense::Median,
            Defense::Gaussian => PsDefense::Gaussian,
            Defense::None => PsDefense::None,
        }
    }
}

/// Pipeline parameters. Fill with [`ps_config_default`] and override fields.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PsConfig {
    pub defense: PsDefense,
    pub lambda_v: f64,
    pub alpha: u8,
    /// The first `n_kernels` entries are used.
    pub kernels: [usize; PS_MAX_KERNELS],
    pub n_kernels: usize,
    pub colors: usize,
    pub bits: u8,
    pub quality: u8,
    pub median_size: usize,
    pub gaussian_size: usize,
    pub seed: u64,
    pub soft_size: usize,
    pub sample_stride: usize,
}

impl From<&PipelineConfig> for PsConfig {
    fn from(c: &PipelineConfig) -> Self {
        let mut kernels = [0; PS_MAX_KERNELS];
        let n = c.kernels.len().min(PS_MAX_KERNELS);
        kernels[..n].copy_from_slice(&c.kernels[..n]);
        PsConfig {
            defense: c.defense.into(),
            lambda_v: c.lambda_v,
            alpha: c.alpha,
            kernels,
            n_kernels: n,
            colors: c.colors,
            bits: c.bits,
            quality: c.quality,
            median_size: c.median_size,
            gaussian_size: c.gaussian_size,
            seed: c.seed,
            soft_size: c.soft_size,
            sample_stride: c.sample_stride,
        }
    }
}

impl PsConfig {
    fn pipeline(&self) -> Result<PipelineConfig, Failure> {
        if self.n_kernels > PS_MAX_KERNELS {
            return Err(Failure(
                PsStatus::InvalidParameter,
                format!("n_kernels {} exceeds {PS_MAX_KERNELS}", self.n_kernels),
            ));
        }
        Ok(PipelineConfig {
            defense: self.defense.into(),
            lambda_v: self.lambda_v,
            alpha: self.alpha,
            kernels: self.kernels[..self.n_kernels].to_vec(),
            colors: self.colors,
            bits: self.bits,
            quality: self.quality,
            median_size: self.median_size,
            gaussian_size: self.gaussian_size,
            seed: self.seed,
            soft_size: self.soft_size,
            sample_stride: self.sample_stride,
        })
    }
}

/// Opaque image handle.
pub struct PsRaster(Raster);

/// Opaque edge detection result.
pub struct PsEdges(EdgeMap);

struct Failure(PsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => PsStatus::Io,
            Error::UnsupportedFormat(_) | Error::UnsupportedBitDepth(_) | Error::Png(_) => {
                PsStatus::UnsupportedFormat
            }
            Error::DimensionOverflow(_) | Error::InvalidDimensions(_) | Error::EmptyInput(_) => {
                PsStatus::InvalidDimensions
            }
            Error::ChannelMismatch(_) | Error::InvalidColorSpace(_) => PsStatus::ChannelMismatch,
            Error::InvalidParameter { .. } => PsStatus::InvalidParameter,
            _ => PsStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> PsStatus
where
    F: FnOnce() -> Result<(), Failure> + UnwindSafe,
{
    match catch_unwind(f) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PsStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PsStatus::NullPointer, format!("`{what}` is NULL"))
}

unsafe fn raster_ref<'a>(p: *const PsRaster, what: &str) -> Result<&'a Raster, Failure> {
    p.as_ref().map(|r| &r.0).ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(PsStatus::InvalidParameter, "path is not valid UTF-8".into()))
}

unsafe fn emit(out: *mut *mut PsRaster, img: Raster) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(PsRaster(img)));
    Ok(())
}

/// Message for the last failure on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies `len` bytes of interleaved samples into a new raster.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_new(
    width: u32,
    height: u32,
    colorspace: PsColorSpace,
    data: *const u8,
    len: usize,
    out: *mut *mut PsRaster,
) -> PsStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let cs = match colorspace {
            PsColorSpace::Rgb => ColorSpace::Rgb,
            PsColorSpace::Gray => ColorSpace::Gray,
        };
        let bytes = std::slice::from_raw_parts(data, len).to_vec();
        emit(out, Raster::new(width, height, cs, bytes)?)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_load(path: *const c_char, out: *mut *mut PsRaster) -> PsStatus {
    guard(|| {
        let path = path_arg(path)?;
        emit(out, load(path)?)
    })
}

/// Writes PNG, PPM or PGM depending on the extension of `path`.
///
/// # Safety
/// `raster` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_save(raster: *const PsRaster, path: *const c_char) -> PsStatus {
    guard(|| {
        let img = raster_ref(raster, "raster")?;
        save(img, path_arg(path)?)?;
        Ok(())
    })
}

/// Releases a raster. NULL is ignored.
///
/// # Safety
/// `raster` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_free(raster: *mut PsRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

/// # Safety
/// `raster` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_width(raster: *const PsRaster) -> u32 {
    raster.as_ref().map_or(0, |r| r.0.width())
}

/// # Safety
/// `raster` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_height(raster: *const PsRaster) -> u32 {
    raster.as_ref().map_or(0, |r| r.0.height())
}

/// # Safety
/// `raster` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_channels(raster: *const PsRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.channels())
}

/// Borrowed pointer to the interleaved samples; `len` receives their count.
/// Valid while the handle lives.
///
/// # Safety
/// `raster` must be NULL or a live handle; `len` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ps_raster_data(raster: *const PsRaster, len: *mut usize) -> *const u8 {
    let Some(r) = raster.as_ref() else {
        return ptr::null();
    };
    if let Some(l) = len.as_mut() {
        *l = r.0.data().len();
    }
    r.0.data().as_ptr()
}

/// Fills `out` with the default (headline) configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_config_default(out: *mut PsConfig) -> PsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = PsConfig::from(&PipelineConfig::default());
        Ok(())
    })
}

/// Runs the configured defense.
///
/// # Safety
/// `input` must be a live handle, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_defend(
    input: *const PsRaster,
    config: *const PsConfig,
    out: *mut *mut PsRaster,
) -> PsStatus {
    guard(|| {
        let img = raster_ref(input, "input")?;
        let cfg = config.as_ref().ok_or_else(|| null("config"))?.pipeline()?;
        emit(out, defend(img, &cfg)?.image)
    })
}

/// Auto-threshold Canny on the luminance of `input`.
///
/// # Safety
/// `input` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_canny(
    input: *const PsRaster,
    lambda_v: f64,
    soft_size: usize,
    out: *mut *mut PsEdges,
) -> PsStatus {
    guard(|| {
        let img = raster_ref(input, "input")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let edges = canny_auto_with(&luminance(img)?, lambda_v, soft_size)?;
        *out = Box::into_raw(Box::new(PsEdges(edges)));
        Ok(())
    })
}

/// Copies the binary mask (`soft = false`) or the soft map into a new raster.
///
/// # Safety
/// `edges` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_edges_map(
    edges: *const PsEdges,
    soft: bool,
    out: *mut *mut PsRaster,
) -> PsStatus {
    guard(|| {
        let e = edges.as_ref().ok_or_else(|| null("edges"))?;
        emit(
            out,
            if soft {
                e.0.soft().clone()
            } else {
                e.0.mask().clone()
            },
        )
    })
}

/// Writes the hysteresis thresholds (magnitude bins). Either pointer may be NULL.
///
/// # Safety
/// `edges` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_edges_thresholds(
    edges: *const PsEdges,
    t_low: *mut u32,
    t_high: *mut u32,
) -> PsStatus {
    guard(|| {
        let t = edges.as_ref().ok_or_else(|| null("edges"))?.0.thresholds();
        if let Some(p) = t_low.as_mut() {
            *p = t.t_low;
        }
        if let Some(p) = t_high.as_mut() {
            *p = t.t_high;
        }
        Ok(())
    })
}

/// # Safety
/// `edges` must come from [`ps_canny`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_edges_free(edges: *mut PsEdges) {
    if !edges.is_null() {
        drop(Box::from_raw(edges));
    }
}

macro_rules! baseline {
    ($(#[$doc:meta])* $name:ident, $arg:ident: $ty:ty, $op:expr) => {
        $(#[$doc])*
        ///
        /// # Safety
        /// `input` must be a live handle and `out` writable.
        #[no_mangle]
        pub unsafe extern "C" fn $name(input: *const PsRaster, $arg: $ty, out: *mut *mut PsRaster) -> PsStatus {
            guard(|| {
                let img = raster_ref(input, "input")?;
                emit(out, $op(img, $arg)?)
            })
        }
    };
}

baseline!(
    /// Bit-depth reduction to `bits` bits per sample.
    ps_bit_depth, bits: u8, bit_depth_reduce
);
baseline!(
    /// JPEG-style DCT round trip at `quality` (1..=100).
    ps_jpeg, quality: u8, jpeg_roundtrip
);
baseline!(
    /// Median filter of odd `size`.
    ps_median, size: usize, median_blur
);
baseline!(
    /// Gaussian blur of odd `size`.
    ps_gaussian, size: usize, gaussian_blur
);
