//! PNG and binary netpbm (P5/P6) reading and writing.

use std::fs;
use std::io::{BufWriter, Cursor};
use std::path::Path;

use super::{ColorSpace, Raster, MAX_SIDE};
use crate::{Error, Result};

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Reads a PNG or binary PPM/PGM file. The format is detected from the
/// file contents, not the extension.
pub fn load(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<Raster> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else {
        Err(Error::UnsupportedFormat(
            "expected PNG or binary PPM/PGM (P6/P5)".into(),
        ))
    }
}

/// Writes `img` to `path`; the extension picks the format and must agree with
/// the channel count (`.ppm` for RGB, `.pgm` for gray, `.png` for either).
pub fn save(img: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if img.colorspace() == ColorSpace::YCbCr {
        return Err(Error::InvalidColorSpace(
            "YCbCr rasters must be converted to RGB before saving".into(),
        ));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = match (ext.as_str(), img.channels()) {
        ("ppm", 3) | ("pgm", 1) => encode_pnm(img),
        ("png", _) => encode_png(img)?,
        ("ppm", c) | ("pgm", c) => {
            return Err(Error::ChannelMismatch(format!(
                ".{ext} cannot hold a {c}-channel image"
            )))
        }
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "unknown output extension `{ext}` (use .png, .ppm or .pgm)"
            )))
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn check_side(v: u64) -> Result<u32> {
    if v == 0 {
        return Err(Error::InvalidDimensions("zero-sized image".into()));
    }
    if v > MAX_SIDE as u64 {
        return Err(Error::DimensionOverflow(v));
    }
    Ok(v as u32)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::UnsupportedFormat("malformed netpbm header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat("netpbm header value out of range".into()))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<Raster> {
    let colorspace = if bytes[1] == b'6' {
        ColorSpace::Rgb
    } else {
        ColorSpace::Gray
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = check_side(cur.number()?)?;
    let height = check_side(cur.number()?)?;
    let maxval = cur.number()?;
    if maxval > 255 {
        return Err(Error::UnsupportedBitDepth(format!(
            "maxval {maxval} (only 8-bit samples are supported)"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval {maxval} (only maxval 255 is supported)"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::UnsupportedFormat("truncated netpbm header".into()));
    }
    let start = cur.pos + 1;
    let len = width as usize * height as usize * colorspace.channels();
    let body = bytes
        .get(start..start + len)
        .ok_or_else(|| Error::UnsupportedFormat("truncated netpbm raster".into()))?;
    Raster::new(width, height, colorspace, body.to_vec())
}

fn encode_pnm(img: &Raster) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let png_err = |e: png::DecodingError| Error::Png(e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    if info.bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedBitDepth("16-bit PNG".into()));
    }
    let width = check_side(info.width as u64)?;
    let height = check_side(info.height as u64)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    let colorspace = match frame.color_type {
        png::ColorType::Grayscale => ColorSpace::Gray,
        png::ColorType::Rgb => ColorSpace::Rgb,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "PNG color type {other:?} (alpha channels are not supported)"
            )))
        }
    };
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(format!("{:?}", frame.bit_depth)));
    }
    let row = width as usize * colorspace.channels();
    let mut data = Vec::with_capacity(row * height as usize);
    for line in buf.chunks(frame.line_size).take(height as usize) {
        data.extend_from_slice(&line[..row]);
    }
    Raster::new(width, height, colorspace, data)
}

fn encode_png(img: &Raster) -> Result<Vec<u8>> {
    let png_err = |e: png::EncodingError| Error::Png(e.to_string());
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(BufWriter::new(&mut out), img.width(), img.height());
        encoder.set_color(if img.channels() == 3 {
            png::ColorType::Rgb
        } else {
            png::ColorType::Grayscale
        });
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(png_err)?;
        writer.write_image_data(img.data()).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}
