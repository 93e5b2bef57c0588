//! Composition of the stages into named defenses.

use std::fmt;
use std::str::FromStr;

use crate::codec::jpeg_roundtrip;
use crate::edge::{canny_auto_with, EdgeMap, DEFAULT_LAMBDA_V};
use crate::quantize::{bit_depth_reduce, reduce_colors, QuantizeConfig, Variant};
use crate::raster::{to_gray, ColorSpace, Raster};
use crate::smooth::{adaptive_gaussian, gaussian_blur, median_blur, KernelBank, DEFAULT_SOFT_SIZE};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Defense {
    AdaptiveGaussian,
    AdaptiveGk,
    FastAdaptiveGk,
    GkMeans,
    FastGkMeans,
    Kmeans,
    BitDepth,
    Jpeg,
    Median,
    Gaussian,
    None,
}

impl Defense {
    pub const ALL: [Defense; 11] = [
        Defense::AdaptiveGaussian,
        Defense::AdaptiveGk,
        Defense::FastAdaptiveGk,
        Defense::GkMeans,
        Defense::FastGkMeans,
        Defense::Kmeans,
        Defense::BitDepth,
        Defense::Jpeg,
        Defense::Median,
        Defense::Gaussian,
        Defense::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Defense::AdaptiveGaussian => "adaptive_gaussian",
            Defense::AdaptiveGk => "adaptive_gk",
            Defense::FastAdaptiveGk => "fast_adaptive_gk",
            Defense::GkMeans => "gk_means",
            Defense::FastGkMeans => "fast_gk_means",
            Defense::Kmeans => "kmeans",
            Defense::BitDepth => "bit_depth",
            Defense::Jpeg => "jpeg",
            Defense::Median => "median",
            Defense::Gaussian => "gaussian",
            Defense::None => "none",
        }
    }

    /// Whether the defense runs edge detection.
    pub fn uses_edges(self) -> bool {
        matches!(
            self,
            Defense::AdaptiveGaussian | Defense::AdaptiveGk | Defense::FastAdaptiveGk
        )
    }

    /// The color-reduction variant, for defenses that end in K-means.
    pub fn variant(self) -> Option<Variant> {
        match self {
            Defense::AdaptiveGk => Some(Variant::AdaptiveGk),
            Defense::FastAdaptiveGk => Some(Variant::FastAdaptiveGk),
            Defense::GkMeans => Some(Variant::GkMeans),
            Defense::FastGkMeans => Some(Variant::FastGkMeans),
            Defense::Kmeans => Some(Variant::PlainKmeans),
            _ => None,
        }
    }
}

impl fmt::Display for Defense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Defense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Defense::ALL
            .into_iter()
            .find(|d| d.name() == norm)
            .ok_or_else(|| Error::param("defense", format!("unknown defense `{s}`")))
    }
}

/// Parses a kernel set: either a range `3-9` (odd sizes from 3 to 9) or a
/// comma list `3,5,7`.
pub fn parse_kernels(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::param("kernels", format!("cannot parse `{s}`"));
    let s = s.trim();
    let sizes: Vec<usize> = if let Some((a, b)) = s.split_once('-') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a.is_multiple_of(2) || b.is_multiple_of(2) || a > b {
            return Err(Error::param(
                "kernels",
                format!("range `{s}` needs odd bounds in increasing order"),
            ));
        }
        (a..=b).step_by(2).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    Ok(sizes)
}

/// Formats kernel sizes the way [`parse_kernels`] reads them back: as a range
/// when the sizes are consecutive odd numbers.
pub fn format_kernels(sizes: &[usize]) -> String {
    let consecutive = sizes.len() > 1 && sizes.windows(2).all(|w| w[1] == w[0] + 2);
    if consecutive && sizes[0] % 2 == 1 {
        format!("{}-{}", sizes[0], sizes[sizes.len() - 1])
    } else {
        let parts: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
        parts.join(",")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub defense: Defense,
    pub lambda_v: f64,
    pub alpha: u8,
    pub kernels: Vec<usize>,
    pub colors: usize,
    pub bits: u8,
    pub quality: u8,
    pub median_size: usize,
    pub gaussian_size: usize,
    pub seed: u64,
    pub soft_size: usize,
    /// Subsampling stride of the fast K-means variants.
    pub sample_stride: usize,
}

impl Default for PipelineConfig {
    /// The headline configuration: fast adaptive Gaussian + K-means, 128
    /// colors, `lambda_v` 670, kernels 3-9, alpha 2.
    fn default() -> Self {
        PipelineConfig {
            defense: Defense::FastAdaptiveGk,
            lambda_v: DEFAULT_LAMBDA_V,
            alpha: 2,
            kernels: vec![3, 5, 7, 9],
            colors: 128,
            bits: 4,
            quality: 75,
            median_size: 3,
            gaussian_size: 5,
            seed: 0,
            soft_size: DEFAULT_SOFT_SIZE,
            sample_stride: QuantizeConfig::default().sample_stride,
        }
    }
}

impl PipelineConfig {
    pub fn with_defense(defense: Defense) -> Self {
        PipelineConfig {
            defense,
            ..Default::default()
        }
    }

    pub fn kernel_bank(&self) -> Result<KernelBank> {
        KernelBank::new(&self.kernels, self.alpha)
    }

    pub fn quantize_config(&self, variant: Variant) -> QuantizeConfig {
        QuantizeConfig {
            k: self.colors,
            variant,
            sample_stride: self.sample_stride,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefendOutput {
    pub image: Raster,
    /// Present for the edge-guided defenses.
    pub edges: Option<EdgeMap>,
}

/// Grayscale view used by edge detection.
pub fn luminance(img: &Raster) -> Result<Raster> {
    match img.colorspace() {
        ColorSpace::Gray => Ok(img.clone()),
        _ => to_gray(img),
    }
}

/// Runs the configured defense on one image.
pub fn defend(img: &Raster, cfg: &PipelineConfig) -> Result<DefendOutput> {
    let plain = |image| DefendOutput { image, edges: None };
    match cfg.defense {
        Defense::None => Ok(plain(img.clone())),
        Defense::BitDepth => bit_depth_reduce(img, cfg.bits).map(plain),
        Defense::Jpeg => jpeg_roundtrip(img, cfg.quality).map(plain),
        Defense::Median => median_blur(img, cfg.median_size).map(plain),
        Defense::Gaussian => gaussian_blur(img, cfg.gaussian_size).map(plain),
        Defense::Kmeans | Defense::GkMeans | Defense::FastGkMeans => {
            let q = cfg.quantize_config(cfg.defense.variant().expect("k-means defense"));
            reduce_colors(img, &q, None, None).map(plain)
        }
        Defense::AdaptiveGaussian | Defense::AdaptiveGk | Defense::FastAdaptiveGk => {
            let bank = cfg.kernel_bank()?;
            let edges = canny_auto_with(&luminance(img)?, cfg.lambda_v, cfg.soft_size)?;
            let image = match cfg.defense.variant() {
                Some(v) => reduce_colors(img, &cfg.quantize_config(v), Some(&edges), Some(&bank))?,
                None => adaptive_gaussian(img, &edges, &bank)?,
            };
            Ok(DefendOutput {
                image,
                edges: Some(edges),
            })
        }
    }
}

/// Root-mean-square per-sample difference: the L2 distance normalized by the
/// square root of the sample count.
pub fn l2_distance(a: &Raster, b: &Raster) -> Result<f64> {
    if !a.same_shape(b) || a.channels() != b.channels() {
        return Err(Error::InvalidDimensions(format!(
            "cannot compare {}x{}x{} with {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    Ok((sum / a.data().len() as f64).sqrt())
}
