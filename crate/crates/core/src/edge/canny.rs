use std::collections::VecDeque;

use super::gradient::{gradient_stats, GradientStats};
use super::nfa::{auto_thresholds, NfaThresholds};
use crate::raster::{ColorSpace, Raster};
use crate::smooth::{soft_edges, DEFAULT_SOFT_SIZE};
use crate::Result;

/// Binary edge mask and its blurred ("soft") counterpart.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    mask: Raster,
    soft: Raster,
    thresholds: NfaThresholds,
}

impl EdgeMap {
    /// `{0, 255}` per pixel.
    pub fn mask(&self) -> &Raster {
        &self.mask
    }

    pub fn soft(&self) -> &Raster {
        &self.soft
    }

    pub fn thresholds(&self) -> NfaThresholds {
        self.thresholds
    }

    pub fn edge_pixels(&self) -> usize {
        self.mask.data().iter().filter(|&&v| v == 255).count()
    }

    pub fn edge_fraction(&self) -> f64 {
        self.edge_pixels() as f64 / self.mask.pixel_count() as f64
    }
}

/// Canny edge detection with thresholds from [`auto_thresholds`] and a
/// 7x7 soft map.
pub fn canny_auto(gray: &Raster, lambda_v: f64) -> Result<EdgeMap> {
    canny_auto_with(gray, lambda_v, DEFAULT_SOFT_SIZE)
}

pub fn canny_auto_with(gray: &Raster, lambda_v: f64, soft_size: usize) -> Result<EdgeMap> {
    let stats = gradient_stats(gray)?;
    let thresholds = auto_thresholds(&stats, lambda_v)?;
    let thin = non_maximum_suppression(&stats);
    let mask_data = hysteresis(&stats, &thin, thresholds);
    let mask = Raster::new(gray.width(), gray.height(), ColorSpace::Gray, mask_data)?;
    let soft = soft_edges(&mask, soft_size)?;
    Ok(EdgeMap {
        mask,
        soft,
        thresholds,
    })
}

/// Keeps a pixel only if its magnitude is >= both neighbors along its
/// gradient direction. The one-pixel frame is always suppressed.
fn non_maximum_suppression(stats: &GradientStats) -> Vec<bool> {
    let (w, h) = (stats.width(), stats.height());
    let mag = stats.magnitude();
    let dir = stats.direction();
    let mut keep = vec![false; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            keep[i] = dir[i].neighbors().iter().all(|&(dx, dy)| {
                let j = (y as isize + dy) as usize * w + (x as isize + dx) as usize;
                m >= mag[j]
            });
        }
    }
    keep
}

/// Strong pixels (magnitude > t_high) seed an 8-connected flood fill through
/// candidates with magnitude > t_low.
fn hysteresis(stats: &GradientStats, thin: &[bool], t: NfaThresholds) -> Vec<u8> {
    let (w, h) = (stats.width(), stats.height());
    let mag = stats.magnitude();
    let candidate = |i: usize| thin[i] && mag[i] as u32 > t.t_low;
    let mut out = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if candidate(i) && mag[i] as u32 > t.t_high {
            out[i] = 255;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0 && candidate(j) {
                    out[j] = 255;
                    queue.push_back(j);
                }
            }
        }
    }
    out
}
