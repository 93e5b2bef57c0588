use rayon::prelude::*;

use crate::border::reflect101;
use crate::raster::{to_u8, Raster};
use crate::{Error, Result};

pub const MIN_KERNEL: usize = 3;
pub const MAX_KERNEL: usize = 31;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    size: usize,
    sigma: f64,
    /// Normalized 1D profile; the 2D kernel is its outer product.
    profile: Vec<f64>,
}

/// Sigma implied by a kernel size, `0.3 * ((size - 1) / 2 - 1) + 0.8`.
pub fn sigma_for_size(size: usize) -> f64 {
    0.3 * ((size as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

pub fn make_kernel(size: usize) -> Result<GaussianKernel> {
    if size.is_multiple_of(2) || !(MIN_KERNEL..=MAX_KERNEL).contains(&size) {
        return Err(Error::param(
            "size",
            format!("kernel size must be odd and within {MIN_KERNEL}..={MAX_KERNEL}, got {size}"),
        ));
    }
    let sigma = sigma_for_size(size);
    let r = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - r;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(GaussianKernel {
        size,
        sigma,
        profile: raw.into_iter().map(|v| v / sum).collect(),
    })
}

impl GaussianKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Row-major `size x size` weights.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.size * self.size);
        for &a in &self.profile {
            for &b in &self.profile {
                w.push(a * b);
            }
        }
        w
    }

    pub fn weight(&self, dx: usize, dy: usize) -> f64 {
        self.profile[dy] * self.profile[dx]
    }
}

/// Separable convolution of one plane with reflect-101 borders, unrounded.
pub(crate) fn convolve_plane(
    plane: &[f64],
    width: usize,
    height: usize,
    profile: &[f64],
) -> Vec<f64> {
    let r = (profile.len() / 2) as isize;
    let xs: Vec<Vec<usize>> = (0..width)
        .map(|x| {
            (-r..=r)
                .map(|d| reflect101(x as isize + d, width))
                .collect()
        })
        .collect();
    let mut tmp = vec![0.0; width * height];
    tmp.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let src = &plane[y * width..(y + 1) * width];
        for (x, out) in row.iter_mut().enumerate() {
            *out = xs[x].iter().zip(profile).map(|(&i, &w)| src[i] * w).sum();
        }
    });
    let ys: Vec<Vec<usize>> = (0..height)
        .map(|y| {
            (-r..=r)
                .map(|d| reflect101(y as isize + d, height))
                .collect()
        })
        .collect();
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = ys[y]
                .iter()
                .zip(profile)
                .map(|(&j, &w)| tmp[j * width + x] * w)
                .sum();
        }
    });
    out
}

/// Gaussian blur of a single 8-bit plane.
pub fn gaussian_blur_plane(
    plane: &[u8],
    width: usize,
    height: usize,
    size: usize,
) -> Result<Vec<u8>> {
    let k = make_kernel(size)?;
    let src: Vec<f64> = plane.iter().map(|&v| v as f64).collect();
    Ok(convolve_plane(&src, width, height, k.profile())
        .into_iter()
        .map(to_u8)
        .collect())
}

/// Per-channel Gaussian blur with the kernel from [`make_kernel`].
pub fn gaussian_blur(img: &Raster, size: usize) -> Result<Raster> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let planes = img
        .planes()
        .iter()
        .map(|p| gaussian_blur_plane(p, w, h, size))
        .collect::<Result<Vec<_>>>()?;
    Raster::from_planes(img.width(), img.height(), img.colorspace(), &planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::ColorSpace;
    use proptest::prelude::*;

    /// Direct 2D evaluation, independent of the separable path.
    fn grid_weights(size: usize) -> Vec<f64> {
        let sigma = sigma_for_size(size);
        let r = (size / 2) as f64;
        let mut w = Vec::new();
        for y in 0..size {
            for x in 0..size {
                let (dx, dy) = (x as f64 - r, y as f64 - r);
                w.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
            }
        }
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }

    #[test]
    fn sigma_convention() {
        assert!((make_kernel(3).unwrap().sigma() - 0.8).abs() < 1e-12);
        assert!((make_kernel(9).unwrap().sigma() - 1.7).abs() < 1e-12);
        assert!((make_kernel(5).unwrap().sigma() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn size3_center_weight() {
        let k = make_kernel(3).unwrap();
        // 1 / (1 + 2 exp(-1/1.28))^2
        assert!((k.weight(1, 1) - 0.272_496).abs() < 1e-6);
    }

    #[test]
    fn matches_direct_grid_and_is_symmetric() {
        for size in (3..=31).step_by(2) {
            let k = make_kernel(size).unwrap();
            let w = k.weights();
            let g = grid_weights(size);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for y in 0..size {
                for x in 0..size {
                    let v = w[y * size + x];
                    assert!((v - g[y * size + x]).abs() < 1e-12);
                    assert!((v - w[y * size + (size - 1 - x)]).abs() < 1e-15);
                    assert!((v - w[(size - 1 - y) * size + x]).abs() < 1e-15);
                    assert!((v - w[x * size + y]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        for s in [0, 1, 2, 4, 33] {
            assert!(make_kernel(s).is_err(), "{s}");
        }
    }

    #[test]
    fn constant_and_single_pixel() {
        let c = Raster::filled(7, 5, ColorSpace::Rgb, 77).unwrap();
        assert_eq!(gaussian_blur(&c, 9).unwrap(), c);
        let one = Raster::new(1, 1, ColorSpace::Gray, vec![200]).unwrap();
        assert_eq!(gaussian_blur(&one, 31).unwrap(), one);
    }

    #[test]
    fn impulse_response() {
        let mut data = vec![0u8; 25];
        data[12] = 255;
        let img = Raster::new(5, 5, ColorSpace::Gray, data).unwrap();
        let out = gaussian_blur(&img, 3).unwrap();
        let g = grid_weights(3);
        assert_eq!(out.sample(2, 2, 0), (255.0 * g[4]).round() as u8);
        assert_eq!(out.sample(2, 2, 0), 69);
        assert_eq!(out.sample(1, 1, 0), (255.0 * g[0]).round() as u8);
    }

    proptest! {
        #[test]
        fn mean_preserved_on_padded_patterns(
            pattern in prop::collection::vec(any::<u8>(), 36),
            bg in any::<u8>(),
            size in prop::sample::select(vec![3usize, 5, 7, 9]),
        ) {
            // 6x6 pattern centred in a constant field wide enough for the kernel.
            let pad = 5;
            let n = 6 + 2 * pad;
            let mut data = vec![bg; n * n];
            for y in 0..6 {
                for x in 0..6 {
                    data[(y + pad) * n + x + pad] = pattern[y * 6 + x];
                }
            }
            let img = Raster::new(n as u32, n as u32, ColorSpace::Gray, data).unwrap();
            let out = gaussian_blur(&img, size).unwrap();
            let mean = |r: &Raster| r.data().iter().map(|&v| v as f64).sum::<f64>() / (n * n) as f64;
            prop_assert!((mean(&img) - mean(&out)).abs() <= 1.0);
        }
    }
}
