//! Color reduction: K-means palettes, the GK-means family, and bit-depth
//! reduction.

mod kmeans;

pub use kmeans::{kmeans_fit, kmeans_fit_traced, KMeansParams, Palette, MAX_COLORS};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::edge::EdgeMap;
use crate::raster::{to_u8, Raster};
use crate::smooth::{adaptive_gaussian, gaussian_blur, KernelBank};
use crate::{Error, Result};

/// Kernel size of the fixed pre-blur in the GK-means variants.
pub const GK_BLUR_SIZE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    PlainKmeans,
    GkMeans,
    FastGkMeans,
    AdaptiveGk,
    FastAdaptiveGk,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::PlainKmeans,
        Variant::GkMeans,
        Variant::FastGkMeans,
        Variant::AdaptiveGk,
        Variant::FastAdaptiveGk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::PlainKmeans => "plain_kmeans",
            Variant::GkMeans => "gk_means",
            Variant::FastGkMeans => "fast_gk_means",
            Variant::AdaptiveGk => "adaptive_gk",
            Variant::FastAdaptiveGk => "fast_adaptive_gk",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Variant::AdaptiveGk | Variant::FastAdaptiveGk)
    }

    pub fn is_fast(self) -> bool {
        matches!(self, Variant::FastGkMeans | Variant::FastAdaptiveGk)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::param("variant", format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizeConfig {
    pub k: usize,
    pub variant: Variant,
    /// Subsampling step in both axes for the fast variants.
    pub sample_stride: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for QuantizeConfig {
    fn default() -> Self {
        QuantizeConfig {
            k: 128,
            variant: Variant::PlainKmeans,
            sample_stride: 4,
            seed: 0,
            max_iters: 30,
            tol: 1e-3,
        }
    }
}

impl QuantizeConfig {
    fn params(&self) -> KMeansParams {
        KMeansParams {
            k: self.k,
            seed: self.seed,
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

/// Replaces every pixel by its nearest palette color (ties: lowest index).
pub fn apply_palette(img: &Raster, palette: &Palette) -> Result<Raster> {
    let c = img.channels();
    if palette.channels() != c {
        return Err(Error::ChannelMismatch(format!(
            "{}-channel palette for a {c}-channel image",
            palette.channels()
        )));
    }
    let rounded: Vec<Vec<u8>> = palette
        .colors()
        .map(|col| col.iter().map(|&v| to_u8(v)).collect())
        .collect();
    let mut out = vec![0u8; img.data().len()];
    out.par_chunks_exact_mut(c)
        .zip(img.data().par_chunks_exact(c))
        .for_each(|(o, px)| {
            let (j, _) = palette.nearest(px);
            o.copy_from_slice(&rounded[j]);
        });
    img.with_data(out)
}

fn subsample(img: &Raster, stride: usize) -> Vec<u8> {
    let (w, h, c) = (img.width() as usize, img.height() as usize, img.channels());
    let mut out = Vec::with_capacity((w / stride + 1) * (h / stride + 1) * c);
    for y in (0..h).step_by(stride) {
        for x in (0..w).step_by(stride) {
            let i = (y * w + x) * c;
            out.extend_from_slice(&img.data()[i..i + c]);
        }
    }
    out
}

fn fit_and_apply(img: &Raster, cfg: &QuantizeConfig, stride: usize) -> Result<Raster> {
    let palette = if stride == 1 {
        kmeans_fit(img.data(), img.channels(), &cfg.params())?
    } else {
        kmeans_fit(&subsample(img, stride), img.channels(), &cfg.params())?
    };
    apply_palette(img, &palette)
}

/// Color reduction with the configured variant. The adaptive variants need
/// the edge map and kernel bank that drive [`adaptive_gaussian`].
pub fn reduce_colors(
    img: &Raster,
    cfg: &QuantizeConfig,
    edges: Option<&EdgeMap>,
    bank: Option<&KernelBank>,
) -> Result<Raster> {
    if cfg.sample_stride == 0 {
        return Err(Error::param("sample_stride", "must be at least 1"));
    }
    let stride = if cfg.variant.is_fast() {
        cfg.sample_stride
    } else {
        1
    };
    let smoothed = match cfg.variant {
        Variant::PlainKmeans => None,
        Variant::GkMeans | Variant::FastGkMeans => Some(gaussian_blur(img, GK_BLUR_SIZE)?),
        Variant::AdaptiveGk | Variant::FastAdaptiveGk => {
            let (edges, bank) = edges.zip(bank).ok_or_else(|| {
                Error::param(
                    "variant",
                    format!("{} needs an edge map and a kernel bank", cfg.variant),
                )
            })?;
            Some(adaptive_gaussian(img, edges, bank)?)
        }
    };
    fit_and_apply(smoothed.as_ref().unwrap_or(img), cfg, stride)
}

/// Keeps `bits` bits per sample, mapping levels back onto the full 0..=255
/// range.
pub fn bit_depth_reduce(img: &Raster, bits: u8) -> Result<Raster> {
    if !(1..=8).contains(&bits) {
        return Err(Error::param(
            "bits",
            format!("must be within 1..=8, got {bits}"),
        ));
    }
    let levels = ((1u32 << bits) - 1) as f64;
    let lut: Vec<u8> = (0..=255u32)
        .map(|v| {
            let q = (v as f64 * levels / 255.0).round();
            to_u8(q * 255.0 / levels)
        })
        .collect();
    img.with_data(img.data().iter().map(|&v| lut[v as usize]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge::canny_auto;
    use crate::raster::{to_gray, ColorSpace};
    use proptest::prelude::*;

    fn noise(w: u32, h: u32, seed: u64) -> Raster {
        let mut s = seed;
        let data = (0..w * h * 3)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (s >> 56) as u8
            })
            .collect();
        Raster::new(w, h, ColorSpace::Rgb, data).unwrap()
    }

    #[test]
    fn bit_depth_examples() {
        let img = Raster::new(3, 1, ColorSpace::Gray, vec![0, 255, 128]).unwrap();
        assert_eq!(bit_depth_reduce(&img, 4).unwrap().data(), &[0, 255, 136]);
        let all = Raster::new(256, 1, ColorSpace::Gray, (0..=255).collect()).unwrap();
        assert_eq!(bit_depth_reduce(&all, 8).unwrap(), all);
        assert!(bit_depth_reduce(&all, 0).is_err());
        assert!(bit_depth_reduce(&all, 9).is_err());
    }

    #[test]
    fn bit_depth_properties() {
        let all = Raster::new(256, 1, ColorSpace::Gray, (0..=255).collect()).unwrap();
        for bits in 1..=8 {
            let once = bit_depth_reduce(&all, bits).unwrap();
            assert_eq!(bit_depth_reduce(&once, bits).unwrap(), once);
            assert!(once.data().windows(2).all(|w| w[0] <= w[1]));
            let mut levels = once.data().to_vec();
            levels.dedup();
            assert!(levels.len() <= 1 << bits);
        }
    }

    #[test]
    fn apply_palette_examples() {
        let gray = Raster::new(1, 1, ColorSpace::Gray, vec![100]).unwrap();
        let p = Palette::from_colors(1, vec![0.0, 255.0]).unwrap();
        assert_eq!(apply_palette(&gray, &p).unwrap().data(), &[0]);
        let tie = Palette::from_colors(1, vec![0.0, 200.0]).unwrap();
        assert_eq!(apply_palette(&gray, &tie).unwrap().data(), &[0]);
        let rgb = Raster::new(1, 1, ColorSpace::Rgb, vec![1, 2, 3]).unwrap();
        assert!(matches!(
            apply_palette(&rgb, &p),
            Err(Error::ChannelMismatch(_))
        ));
    }

    #[test]
    fn palette_color_image_is_unchanged() {
        let img = Raster::new(2, 2, ColorSpace::Rgb, [10, 20, 30].repeat(4)).unwrap();
        let p = Palette::from_colors(3, vec![10.0, 20.0, 30.0, 200.0, 0.0, 0.0]).unwrap();
        assert_eq!(apply_palette(&img, &p).unwrap(), img);
    }

    #[test]
    fn plain_kmeans_keeps_images_with_few_colors() {
        // 100 distinct colors, k = 128
        let data: Vec<u8> = (0..200u32)
            .flat_map(|i| {
                let c = i % 100;
                [(c * 2) as u8, (255 - c) as u8, (c * 7 % 256) as u8]
            })
            .collect();
        let img = Raster::new(20, 10, ColorSpace::Rgb, data).unwrap();
        assert_eq!(img.distinct_colors(), 100);
        let out = reduce_colors(&img, &QuantizeConfig::default(), None, None).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn fast_with_unit_stride_matches_full_fit() {
        let img = noise(24, 20, 5);
        let gk = QuantizeConfig {
            k: 16,
            variant: Variant::GkMeans,
            ..QuantizeConfig::default()
        };
        let fast = QuantizeConfig {
            variant: Variant::FastGkMeans,
            sample_stride: 1,
            ..gk
        };
        assert_eq!(
            reduce_colors(&img, &gk, None, None).unwrap(),
            reduce_colors(&img, &fast, None, None).unwrap()
        );
    }

    #[test]
    fn adaptive_variants_need_guidance() {
        let img = noise(16, 16, 1);
        let cfg = QuantizeConfig {
            variant: Variant::AdaptiveGk,
            ..QuantizeConfig::default()
        };
        assert!(reduce_colors(&img, &cfg, None, None).is_err());
        let edges = canny_auto(&to_gray(&img).unwrap(), 670.0).unwrap();
        let bank = KernelBank::new(&[3, 5, 7, 9], 2).unwrap();
        let out = reduce_colors(&img, &cfg, Some(&edges), Some(&bank)).unwrap();
        assert!(out.distinct_colors() <= 128);
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(
            "fast-adaptive-gk".parse::<Variant>().unwrap(),
            Variant::FastAdaptiveGk
        );
        assert!("octree".parse::<Variant>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn palette_bounds_color_count(seed in any::<u64>(), k in 1usize..=40, variant in 0usize..3) {
            let img = noise(17, 13, seed);
            let cfg = QuantizeConfig { k, variant: Variant::ALL[variant], seed, ..QuantizeConfig::default() };
            let out = reduce_colors(&img, &cfg, None, None).unwrap();
            prop_assert!(out.distinct_colors() <= k);
        }

        #[test]
        fn reduction_is_deterministic(seed in any::<u64>()) {
            let img = noise(15, 15, seed);
            let cfg = QuantizeConfig { k: 8, variant: Variant::FastGkMeans, seed, ..QuantizeConfig::default() };
            prop_assert_eq!(
                reduce_colors(&img, &cfg, None, None).unwrap(),
                reduce_colors(&img, &cfg, None, None).unwrap()
            );
        }
    }
}
