use rayon::prelude::*;

use super::kernel::{gaussian_blur_plane, make_kernel, GaussianKernel};
use crate::edge::EdgeMap;
use crate::raster::Raster;
use crate::{Error, Result};

pub const MIN_ALPHA: u8 = 1;
pub const MAX_ALPHA: u8 = 6;

/// Kernel-selection thresholds for `n_kernels` kernels.
///
/// The first threshold is `255 / alpha`; the rest descend linearly so that the
/// last one sits at `first / (n_kernels - 1)`.
pub fn selection_thresholds(alpha: u8, n_kernels: usize) -> Result<Vec<f64>> {
    if !(MIN_ALPHA..=MAX_ALPHA).contains(&alpha) {
        return Err(Error::param(
            "alpha",
            format!("must be within {MIN_ALPHA}..={MAX_ALPHA}, got {alpha}"),
        ));
    }
    if n_kernels < 2 {
        return Err(Error::param(
            "kernels",
            format!("need at least 2 kernels, got {n_kernels}"),
        ));
    }
    let initial = 255.0 / alpha as f64;
    let last = (n_kernels - 1) as f64;
    Ok((1..n_kernels)
        .map(|i| initial * (n_kernels - i) as f64 / last)
        .collect())
}

/// Gaussian kernels of increasing size plus the soft-edge thresholds that pick
/// between them.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBank {
    kernels: Vec<GaussianKernel>,
    alpha: u8,
    thresholds: Vec<f64>,
}

impl KernelBank {
    pub fn new(sizes: &[usize], alpha: u8) -> Result<Self> {
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(
                "kernels",
                format!("sizes must be strictly increasing, got {sizes:?}"),
            ));
        }
        let thresholds = selection_thresholds(alpha, sizes.len())?;
        let kernels = sizes
            .iter()
            .map(|&s| make_kernel(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelBank {
            kernels,
            alpha,
            thresholds,
        })
    }

    pub fn kernels(&self) -> &[GaussianKernel] {
        &self.kernels
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.kernels.iter().map(GaussianKernel::size).collect()
    }

    pub fn alpha(&self) -> u8 {
        self.alpha
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Index of the kernel used for a pixel with soft-edge value `soft`:
    /// strong edges get the smallest kernel, flat regions the largest.
    #[inline]
    pub fn select(&self, soft: u8) -> usize {
        let e = soft as f64;
        self.thresholds.iter().take_while(|&&t| t > e).count()
    }
}

/// Blurs `img` with every kernel of `bank`, then takes each output pixel from
/// the plane chosen by the soft edge value at that pixel.
pub fn adaptive_gaussian(img: &Raster, edges: &EdgeMap, bank: &KernelBank) -> Result<Raster> {
    adaptive_gaussian_soft(img, edges.soft(), bank)
}

/// [`adaptive_gaussian`] driven directly by a soft edge raster.
pub fn adaptive_gaussian_soft(img: &Raster, soft: &Raster, bank: &KernelBank) -> Result<Raster> {
    if !img.same_shape(soft) {
        return Err(Error::InvalidDimensions(format!(
            "edge map is {}x{}, image is {}x{}",
            soft.width(),
            soft.height(),
            img.width(),
            img.height()
        )));
    }
    if soft.channels() != 1 {
        return Err(Error::ChannelMismatch(
            "soft edge map must be single-channel".into(),
        ));
    }
    let (w, h, c) = (img.width() as usize, img.height() as usize, img.channels());
    let choice: Vec<usize> = soft.data().iter().map(|&e| bank.select(e)).collect();
    let mut needed = vec![false; bank.kernels.len()];
    for &j in &choice {
        needed[j] = true;
    }
    let planes = img.planes();
    // blurred[j][ch], only for kernels some pixel actually uses
    let blurred: Vec<Option<Vec<Vec<u8>>>> = bank
        .kernels
        .par_iter()
        .zip(needed.par_iter())
        .map(|(k, &used)| {
            used.then(|| {
                planes
                    .iter()
                    .map(|p| gaussian_blur_plane(p, w, h, k.size()))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0u8; w * h * c];
    for (i, &j) in choice.iter().enumerate() {
        let planes = blurred[j].as_ref().expect("selected plane computed");
        for (ch, plane) in planes.iter().enumerate() {
            out[i * c + ch] = plane[i];
        }
    }
    img.with_data(out)
}
