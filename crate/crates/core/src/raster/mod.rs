//! Image representation shared by every stage, plus color conversion and file I/O.

pub(crate) mod color;
mod io;

pub use color::{rgb_ycbcr, to_gray, Direction};
pub use io::{decode, load, save};

use crate::{Error, Result};

/// Largest accepted width or height.
pub const MAX_SIDE: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Rgb,
    Gray,
    YCbCr,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            ColorSpace::Rgb | ColorSpace::YCbCr => 3,
        }
    }
}

/// Row-major 8-bit image with interleaved channels.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    colorspace: ColorSpace,
    data: Vec<u8>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Raster")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("colorspace", &self.colorspace)
            .finish_non_exhaustive()
    }
}

impl Raster {
    pub fn new(width: u32, height: u32, colorspace: ColorSpace, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!("{width}x{height}")));
        }
        if width > MAX_SIDE || height > MAX_SIDE {
            return Err(Error::DimensionOverflow(width.max(height) as u64));
        }
        let expected = width as usize * height as usize * colorspace.channels();
        if data.len() != expected {
            return Err(Error::InvalidDimensions(format!(
                "{width}x{height}x{} needs {expected} samples, got {}",
                colorspace.channels(),
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            colorspace,
            data,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: u32, height: u32, colorspace: ColorSpace, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * colorspace.channels();
        Raster::new(width, height, colorspace, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.colorspace.channels()
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width as usize + x) * self.channels() + c]
    }

    /// Same shape and color space, new samples.
    pub fn with_data(&self, data: Vec<u8>) -> Result<Self> {
        Raster::new(self.width, self.height, self.colorspace, data)
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Splits into one `Vec` per channel.
    pub fn planes(&self) -> Vec<Vec<u8>> {
        let c = self.channels();
        (0..c)
            .map(|k| self.data.iter().skip(k).step_by(c).copied().collect())
            .collect()
    }

    /// Inverse of [`Raster::planes`].
    pub fn from_planes(
        width: u32,
        height: u32,
        colorspace: ColorSpace,
        planes: &[Vec<u8>],
    ) -> Result<Self> {
        let c = colorspace.channels();
        if planes.len() != c {
            return Err(Error::ChannelMismatch(format!(
                "{} planes for a {c}-channel image",
                planes.len()
            )));
        }
        let n = width as usize * height as usize;
        let mut data = vec![0u8; n * c];
        for (k, plane) in planes.iter().enumerate() {
            if plane.len() != n {
                return Err(Error::InvalidDimensions(format!(
                    "plane {k} has {} samples, expected {n}",
                    plane.len()
                )));
            }
            for (i, &v) in plane.iter().enumerate() {
                data[i * c + k] = v;
            }
        }
        Raster::new(width, height, colorspace, data)
    }

    /// Number of distinct pixel values (colors).
    pub fn distinct_colors(&self) -> usize {
        let mut seen: std::collections::HashSet<&[u8]> = std::collections::HashSet::new();
        for px in self.data.chunks_exact(self.channels()) {
            seen.insert(px);
        }
        seen.len()
    }
}

/// Rounds half away from zero and clamps into the 8-bit range.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
