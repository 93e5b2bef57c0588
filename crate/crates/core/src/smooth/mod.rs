//! Gaussian kernels, the fixed Gaussian/median baselines, and edge-guided
//! adaptive Gaussian smoothing.

mod adaptive;
mod kernel;
mod median;

pub use adaptive::{adaptive_gaussian, selection_thresholds, KernelBank};
pub use kernel::{gaussian_blur, gaussian_blur_plane, make_kernel, sigma_for_size, GaussianKernel};
pub use median::median_blur;

use crate::raster::Raster;
use crate::{Error, Result};

/// Default blur applied to a binary edge mask to obtain its soft counterpart.
pub const DEFAULT_SOFT_SIZE: usize = 7;

/// Gaussian-blurred copy of a binary `{0, 255}` edge mask.
pub fn soft_edges(mask: &Raster, size: usize) -> Result<Raster> {
    if mask.channels() != 1 {
        return Err(Error::ChannelMismatch(
            "edge mask must be single-channel".into(),
        ));
    }
    if let Some(v) = mask.data().iter().find(|&&v| v != 0 && v != 255) {
        return Err(Error::param("mask", format!("non-binary value {v}")));
    }
    gaussian_blur(mask, size)
}
