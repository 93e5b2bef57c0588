use super::{to_u8, ColorSpace, Raster};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// BT.601 luma. Gray input is returned unchanged.
pub fn to_gray(img: &Raster) -> Result<Raster> {
    match img.colorspace() {
        ColorSpace::Gray => Ok(img.clone()),
        ColorSpace::Rgb => {
            let data = img
                .data()
                .chunks_exact(3)
                .map(|p| luma(p[0], p[1], p[2]))
                .collect();
            Raster::new(img.width(), img.height(), ColorSpace::Gray, data)
        }
        ColorSpace::YCbCr => Err(Error::InvalidColorSpace(
            "grayscale conversion expects RGB or GRAY input, got YCbCr".into(),
        )),
    }
}

#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    to_u8(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
}

/// Full-range JFIF conversion between RGB and YCbCr.
pub fn rgb_ycbcr(img: &Raster, direction: Direction) -> Result<Raster> {
    let (expect, target) = match direction {
        Direction::Forward => (ColorSpace::Rgb, ColorSpace::YCbCr),
        Direction::Inverse => (ColorSpace::YCbCr, ColorSpace::Rgb),
    };
    if img.channels() != 3 {
        return Err(Error::ChannelMismatch(format!(
            "color transform needs 3 channels, got {}",
            img.channels()
        )));
    }
    if img.colorspace() != expect {
        return Err(Error::InvalidColorSpace(format!(
            "{direction:?} transform expects {expect:?}, got {:?}",
            img.colorspace()
        )));
    }
    let mut data = Vec::with_capacity(img.data().len());
    for p in img.data().chunks_exact(3) {
        let px = match direction {
            Direction::Forward => forward(p[0], p[1], p[2]),
            Direction::Inverse => inverse(p[0], p[1], p[2]),
        };
        data.extend_from_slice(&px);
    }
    Raster::new(img.width(), img.height(), target, data)
}

#[inline]
pub(crate) fn forward(r: u8, g: u8, b: u8) -> [u8; 3] {
    forward_f64(r as f64, g as f64, b as f64).map(to_u8)
}

#[inline]
pub(crate) fn inverse(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    inverse_f64(y as f64, cb as f64, cr as f64).map(to_u8)
}

/// Unrounded JFIF forward transform.
#[inline]
pub(crate) fn forward_f64(r: f64, g: f64, b: f64) -> [f64; 3] {
    [
        0.299 * r + 0.587 * g + 0.114 * b,
        128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b,
        128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b,
    ]
}

#[inline]
pub(crate) fn inverse_f64(y: f64, cb: f64, cr: f64) -> [f64; 3] {
    let (cb, cr) = (cb - 128.0, cr - 128.0);
    [
        y + 1.402 * cr,
        y - 0.344136 * cb - 0.714136 * cr,
        y + 1.772 * cb,
    ]
}
