use rayon::prelude::*;

use crate::border::reflect101;
use crate::raster::Raster;
use crate::{Error, Result};

/// Per-channel median over a `size x size` reflect-101 neighborhood.
pub fn median_blur(img: &Raster, size: usize) -> Result<Raster> {
    if size.is_multiple_of(2) || size < 3 {
        return Err(Error::param(
            "size",
            format!("median size must be odd and >= 3, got {size}"),
        ));
    }
    let (w, h, c) = (img.width() as usize, img.height() as usize, img.channels());
    let r = (size / 2) as isize;
    let src = img.data();
    let mut out = vec![0u8; src.len()];
    out.par_chunks_mut(w * c).enumerate().for_each(|(y, row)| {
        let mut window = Vec::with_capacity(size * size);
        let ys: Vec<usize> = (-r..=r).map(|d| reflect101(y as isize + d, h)).collect();
        for x in 0..w {
            let xs: Vec<usize> = (-r..=r).map(|d| reflect101(x as isize + d, w)).collect();
            for ch in 0..c {
                window.clear();
                for &yy in &ys {
                    for &xx in &xs {
                        window.push(src[(yy * w + xx) * c + ch]);
                    }
                }
                let mid = window.len() / 2;
                let (_, m, _) = window.select_nth_unstable(mid);
                row[x * c + ch] = *m;
            }
        }
    });
    img.with_data(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::ColorSpace;
    use proptest::prelude::*;

    #[test]
    fn removes_impulse() {
        let mut data = vec![0u8; 25];
        data[12] = 255;
        let img = Raster::new(5, 5, ColorSpace::Gray, data).unwrap();
        assert!(median_blur(&img, 3).unwrap().data().iter().all(|&v| v == 0));
    }

    #[test]
    fn constant_unchanged_and_even_rejected() {
        let c = Raster::filled(4, 3, ColorSpace::Rgb, 9).unwrap();
        assert_eq!(median_blur(&c, 5).unwrap(), c);
        assert!(median_blur(&c, 4).is_err());
        assert!(median_blur(&c, 1).is_err());
    }

    proptest! {
        #[test]
        fn output_is_a_neighborhood_sample(
            (w, h, data) in (1usize..8, 1usize..8).prop_flat_map(|(w, h)| {
                (Just(w), Just(h), prop::collection::vec(any::<u8>(), w * h))
            }),
            size in prop::sample::select(vec![3usize, 5]),
        ) {
            let img = Raster::new(w as u32, h as u32, ColorSpace::Gray, data.clone()).unwrap();
            let out = median_blur(&img, size).unwrap();
            let r = (size / 2) as isize;
            for y in 0..h {
                for x in 0..w {
                    let v = out.sample(x, y, 0);
                    let mut found = false;
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let xx = reflect101(x as isize + dx, w);
                            let yy = reflect101(y as isize + dy, h);
                            found |= data[yy * w + xx] == v;
                        }
                    }
                    prop_assert!(found);
                }
            }
        }
    }
}
