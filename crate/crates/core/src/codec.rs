//! JPEG-style lossy round trip: 8x8 block DCT, quality-scaled quantization,
//! inverse transform.
//!
//! Only the lossy part of the codec is modelled. Entropy coding is lossless and
//! changes no pixel value, so no bitstream is produced. Chroma is kept at full
//! resolution (4:4:4).

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::border::replicate;
use crate::raster::color::{forward_f64, inverse_f64};
use crate::raster::{to_u8, ColorSpace, Raster};
use crate::{Error, Result};

pub type Block = [[f64; 8]; 8];

/// Annex K luminance table, row-major.
pub const BASE_LUMA: [[u16; 8]; 8] = [
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
];

/// Annex K chrominance table, row-major.
pub const BASE_CHROMA: [[u16; 8]; 8] = [
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantTables {
    pub luma: [[u16; 8]; 8],
    pub chroma: [[u16; 8]; 8],
    pub quality: u8,
}

/// libjpeg quality scaling of the base tables.
pub fn scale_tables(quality: u8) -> Result<QuantTables> {
    if !(1..=100).contains(&quality) {
        return Err(Error::param(
            "quality",
            format!("must be within 1..=100, got {quality}"),
        ));
    }
    let q = quality as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let apply = |base: &[[u16; 8]; 8]| {
        let mut out = [[0u16; 8]; 8];
        for (o, b) in out.iter_mut().flatten().zip(base.iter().flatten()) {
            *o = ((*b as u32 * scale + 50) / 100).clamp(1, 255) as u16;
        }
        out
    };
    Ok(QuantTables {
        luma: apply(&BASE_LUMA),
        chroma: apply(&BASE_CHROMA),
        quality,
    })
}

fn basis() -> &'static Block {
    static BASIS: OnceLock<Block> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut c = [[0.0; 8]; 8];
        for (u, row) in c.iter_mut().enumerate() {
            let a = if u == 0 {
                (1.0f64 / 8.0).sqrt()
            } else {
                (2.0f64 / 8.0).sqrt()
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = a * (((2 * x + 1) as f64 * u as f64 * PI) / 16.0).cos();
            }
        }
        c
    })
}

/// Orthonormal 2D DCT-II.
pub fn dct8x8(block: &Block) -> Block {
    let c = basis();
    let mut tmp = [[0.0; 8]; 8];
    for u in 0..8 {
        for y in 0..8 {
            tmp[u][y] = (0..8).map(|x| c[u][x] * block[y][x]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for v in 0..8 {
        for u in 0..8 {
            out[v][u] = (0..8).map(|y| c[v][y] * tmp[u][y]).sum();
        }
    }
    out
}

/// Inverse of [`dct8x8`].
pub fn idct8x8(coef: &Block) -> Block {
    let c = basis();
    let mut tmp = [[0.0; 8]; 8];
    for v in 0..8 {
        for x in 0..8 {
            tmp[v][x] = (0..8).map(|u| c[u][x] * coef[v][u]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for y in 0..8 {
        for x in 0..8 {
            out[y][x] = (0..8).map(|v| c[v][y] * tmp[v][x]).sum();
        }
    }
    out
}

/// Quantizes then dequantizes DCT coefficients.
pub fn quantize_block(coef: &Block, table: &[[u16; 8]; 8]) -> Block {
    let mut out = [[0.0; 8]; 8];
    for v in 0..8 {
        for u in 0..8 {
            let q = table[v][u] as f64;
            out[v][u] = (coef[v][u] / q).round() * q;
        }
    }
    out
}

/// Round trip of one level-shifted block of samples, before pixel rounding.
pub fn roundtrip_block(samples: &Block, table: &[[u16; 8]; 8]) -> Block {
    let mut shifted = *samples;
    shifted.iter_mut().flatten().for_each(|v| *v -= 128.0);
    let mut out = idct8x8(&quantize_block(&dct8x8(&shifted), table));
    out.iter_mut().flatten().for_each(|v| *v += 128.0);
    out
}

fn roundtrip_plane(plane: &[f64], w: usize, h: usize, table: &[[u16; 8]; 8]) -> Vec<f64> {
    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    let blocks: Vec<(usize, usize, Block)> = (0..bw * bh)
        .into_par_iter()
        .map(|b| {
            let (bx, by) = (b % bw, b / bw);
            let mut block = [[0.0; 8]; 8];
            for (y, row) in block.iter_mut().enumerate() {
                for (x, v) in row.iter_mut().enumerate() {
                    let sx = replicate((bx * 8 + x) as isize, w);
                    let sy = replicate((by * 8 + y) as isize, h);
                    *v = plane[sy * w + sx];
                }
            }
            (bx, by, roundtrip_block(&block, table))
        })
        .collect();
    let mut out = vec![0.0; w * h];
    for (bx, by, block) in blocks {
        for (y, row) in block.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                let (px, py) = (bx * 8 + x, by * 8 + y);
                if px < w && py < h {
                    out[py * w + px] = v.clamp(0.0, 255.0);
                }
            }
        }
    }
    out
}

/// Applies the loss of JPEG compression at `quality` to an RGB or gray image.
///
/// The YCbCr planes stay in floating point between the color transform and
/// the DCT; samples are rounded once, on the way back to 8-bit RGB.
pub fn jpeg_roundtrip(img: &Raster, quality: u8) -> Result<Raster> {
    let tables = scale_tables(quality)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img.colorspace() {
        ColorSpace::Gray => {
            let plane: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
            let out = roundtrip_plane(&plane, w, h, &tables.luma);
            img.with_data(out.into_iter().map(to_u8).collect())
        }
        ColorSpace::Rgb => {
            let mut planes: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(w * h)).collect();
            for px in img.data().chunks_exact(3) {
                let ycc = forward_f64(px[0] as f64, px[1] as f64, px[2] as f64);
                for (p, v) in planes.iter_mut().zip(ycc) {
                    p.push(v);
                }
            }
            let planes: Vec<Vec<f64>> = planes
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let table = if i == 0 { &tables.luma } else { &tables.chroma };
                    roundtrip_plane(p, w, h, table)
                })
                .collect();
            let mut out = Vec::with_capacity(w * h * 3);
            for ((&y, &cb), &cr) in planes[0].iter().zip(&planes[1]).zip(&planes[2]) {
                out.extend(inverse_f64(y, cb, cr).map(to_u8));
            }
            img.with_data(out)
        }
        ColorSpace::YCbCr => Err(Error::InvalidColorSpace(
            "JPEG round trip expects RGB or GRAY input".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{rgb_ycbcr, Direction};
    use proptest::prelude::*;

    fn lcg(seed: u64) -> impl FnMut() -> u8 {
        let mut s = seed;
        move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 56) as u8
        }
    }

    fn ac_energy(b: &Block) -> f64 {
        let mean = b.iter().flatten().sum::<f64>() / 64.0;
        b.iter().flatten().map(|v| (v - mean).powi(2)).sum()
    }

    #[test]
    fn table_scaling() {
        assert_eq!(scale_tables(50).unwrap().luma, BASE_LUMA);
        assert_eq!(scale_tables(50).unwrap().chroma, BASE_CHROMA);
        let q75 = scale_tables(75).unwrap();
        assert_eq!(q75.luma[0][0], 8);
        assert_eq!(q75.chroma[0][0], 9);
        let q100 = scale_tables(100).unwrap();
        assert!(q100
            .luma
            .iter()
            .chain(&q100.chroma)
            .flatten()
            .all(|&v| v == 1));
        let q1 = scale_tables(1).unwrap();
        assert!(q1.luma.iter().flatten().all(|&v| (1..=255).contains(&v)));
        assert!(scale_tables(0).is_err());
        assert!(scale_tables(101).is_err());
    }

    #[test]
    fn dct_dc_of_constant_block() {
        let c = dct8x8(&[[10.0; 8]; 8]);
        assert!((c[0][0] - 80.0).abs() < 1e-9);
        assert!(c.iter().flatten().skip(1).all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn constant_images_barely_move() {
        // the chroma DC step times the 1.772 inverse weight stays within 2 from quality 50 up
        for v in [
            [0u8, 0, 0],
            [17, 17, 17],
            [128, 128, 128],
            [200, 30, 90],
            [255, 255, 255],
            [3, 250, 128],
        ] {
            for q in [50u8, 60, 75, 90, 100] {
                let data: Vec<u8> = (0..13 * 9).flat_map(|_| v).collect();
                let img = Raster::new(13, 9, ColorSpace::Rgb, data).unwrap();
                let out = jpeg_roundtrip(&img, q).unwrap();
                let worst = out
                    .data()
                    .iter()
                    .zip(img.data())
                    .map(|(a, b)| a.abs_diff(*b))
                    .max()
                    .unwrap();
                assert!(worst <= 2, "v={v:?} q={q}: {worst}");
            }
        }
    }

    #[test]
    fn lowest_quality_moves_constant_images_further() {
        // luma DC quantizer 255 at quality 1: 8 * (17 - 128) = -888 -> -765
        let img = Raster::filled(8, 8, ColorSpace::Gray, 17).unwrap();
        let out = jpeg_roundtrip(&img, 1).unwrap();
        assert!(out.data().iter().all(|&v| v == 32));
    }

    #[test]
    fn quality_100_stays_close() {
        let mut next = lcg(11);
        for _ in 0..10 {
            let data: Vec<u8> = (0..23 * 17 * 3).map(|_| next()).collect();
            let img = Raster::new(23, 17, ColorSpace::Rgb, data).unwrap();
            let out = jpeg_roundtrip(&img, 100).unwrap();
            let worst = out
                .data()
                .iter()
                .zip(img.data())
                .map(|(a, b)| a.abs_diff(*b))
                .max()
                .unwrap();
            assert!(worst <= 3, "{worst}");
        }
    }

    #[test]
    fn checkerboard_loses_variance() {
        let data: Vec<u8> = (0..16 * 16)
            .flat_map(|i| {
                let v = if (i % 16 + i / 16) % 2 == 0 { 0 } else { 255 };
                [v, v, v]
            })
            .collect();
        let img = Raster::new(16, 16, ColorSpace::Rgb, data).unwrap();
        let out = jpeg_roundtrip(&img, 75).unwrap();
        let var = |r: &Raster| {
            let m = r.data().iter().map(|&v| v as f64).sum::<f64>() / r.data().len() as f64;
            r.data()
                .iter()
                .map(|&v| (v as f64 - m).powi(2))
                .sum::<f64>()
                / r.data().len() as f64
        };
        assert!(var(&out) < var(&img));
    }

    #[test]
    fn gray_path_and_bad_inputs() {
        let img = Raster::new(
            9,
            9,
            ColorSpace::Gray,
            (0..81).map(|i| i as u8 * 3).collect(),
        )
        .unwrap();
        let out = jpeg_roundtrip(&img, 75).unwrap();
        assert_eq!(out.colorspace(), ColorSpace::Gray);
        assert!(jpeg_roundtrip(&img, 0).is_err());
        let ycc = rgb_ycbcr(
            &Raster::filled(2, 2, ColorSpace::Rgb, 3).unwrap(),
            Direction::Forward,
        )
        .unwrap();
        assert!(jpeg_roundtrip(&ycc, 75).is_err());
    }

    #[test]
    fn rounding_to_nearest_can_raise_block_energy() {
        // A lone AC coefficient just above q/2 rounds up to q.
        let table = scale_tables(75).unwrap().luma;
        let q = table[0][1] as f64;
        let mut coef = [[0.0; 8]; 8];
        coef[0][1] = 0.6 * q;
        let mut block = idct8x8(&coef);
        block.iter_mut().flatten().for_each(|v| *v += 128.0);
        let out = roundtrip_block(&block, &table);
        assert!(ac_energy(&out) > ac_energy(&block));
    }

    #[test]
    fn low_amplitude_texture_loses_energy() {
        // coefficients well under q/2 are zeroed
        let table = scale_tables(75).unwrap().luma;
        let mut next = lcg(3);
        for _ in 0..200 {
            let mut b = [[0.0; 8]; 8];
            b.iter_mut()
                .flatten()
                .for_each(|v| *v = 120.0 + (next() % 5) as f64);
            assert!(ac_energy(&roundtrip_block(&b, &table)) <= ac_energy(&b));
        }
    }

    proptest! {
        #[test]
        fn dct_inverts(vals in prop::collection::vec(-128.0f64..128.0, 64)) {
            let mut b = [[0.0; 8]; 8];
            for (i, v) in vals.iter().enumerate() {
                b[i / 8][i % 8] = *v;
            }
            let back = idct8x8(&dct8x8(&b));
            for (x, y) in back.iter().flatten().zip(b.iter().flatten()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }

        #[test]
        fn quantized_coefficients_move_at_most_half_a_step(vals in prop::collection::vec(-128.0f64..128.0, 64), quality in 1u8..=100) {
            let table = scale_tables(quality).unwrap().luma;
            let mut b = [[0.0; 8]; 8];
            for (i, v) in vals.iter().enumerate() {
                b[i / 8][i % 8] = *v;
            }
            let c = dct8x8(&b);
            let qc = quantize_block(&c, &table);
            for v in 0..8 {
                for u in 0..8 {
                    prop_assert!((qc[v][u] - c[v][u]).abs() <= table[v][u] as f64 / 2.0 + 1e-9);
                }
            }
        }

        #[test]
        fn second_pass_is_nearly_idempotent(seed in any::<u64>()) {
            // smooth content: blocks of a low-frequency pattern plus mild noise
            let mut next = lcg(seed);
            let (w, h) = (24usize, 16usize);
            let phase = (next() as f64) / 40.0;
            let data: Vec<u8> = (0..w * h)
                .flat_map(|i| {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    let base = 128.0 + 60.0 * ((x / 5.0 + phase).sin() + (y / 7.0).cos()) / 2.0;
                    let n = (next() % 9) as f64 - 4.0;
                    [to_u8(base + n), to_u8(base * 0.8 + n), to_u8(255.0 - base + n)]
                })
                .collect();
            let img = Raster::new(w as u32, h as u32, ColorSpace::Rgb, data).unwrap();
            let once = jpeg_roundtrip(&img, 75).unwrap();
            let twice = jpeg_roundtrip(&once, 75).unwrap();
            let worst = once.data().iter().zip(twice.data()).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
            prop_assert!(worst <= 1, "max deviation {}", worst);
        }
    }
}
