use std::sync::OnceLock;

use crate::border::reflect101;
use crate::raster::Raster;
use crate::smooth::make_kernel;
use crate::{Error, Result};

/// Largest magnitude bin: magnitudes are rescaled onto `0..=255`.
pub const MAGNITUDE_BINS: u32 = 255;

/// Largest Sobel L2 response kept before rescaling (4 * 255).
const MAGNITUDE_CLAMP: f64 = 1020.0;

/// Gradient direction folded onto `[0, 180)` and snapped to the nearest
/// multiple of 45 degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Orientation {
    fn from_gradient(gx: i64, gy: i64) -> Self {
        let mut angle = (gy as f64).atan2(gx as f64).to_degrees();
        if angle < 0.0 {
            angle += 180.0;
        }
        if !(22.5..157.5).contains(&angle) {
            Orientation::Deg0
        } else if angle < 67.5 {
            Orientation::Deg45
        } else if angle < 112.5 {
            Orientation::Deg90
        } else {
            Orientation::Deg135
        }
    }

    /// Offsets of the two neighbors along the gradient (y grows downward).
    pub(crate) fn neighbors(self) -> [(isize, isize); 2] {
        match self {
            Orientation::Deg0 => [(-1, 0), (1, 0)],
            Orientation::Deg45 => [(1, 1), (-1, -1)],
            Orientation::Deg90 => [(0, -1), (0, 1)],
            Orientation::Deg135 => [(-1, 1), (1, -1)],
        }
    }
}

/// Gradient field of an image together with its magnitude histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientStats {
    width: usize,
    height: usize,
    magnitude: Vec<u16>,
    direction: Vec<Orientation>,
    histogram: Vec<u64>,
    /// `tail_counts[u]` = number of pixels with magnitude >= u.
    tail_counts: Vec<u64>,
    n_p: u128,
    meaningful_length: u32,
}

impl GradientStats {
    /// Statistics for a bare histogram (bins `0..=n_h`) with no pixel field
    /// attached. Useful for reasoning about thresholds in isolation.
    pub fn from_histogram(histogram: Vec<u64>) -> Result<Self> {
        let total: u64 = histogram.iter().sum();
        if histogram.is_empty() || total == 0 {
            return Err(Error::EmptyInput("histogram has no pixels".into()));
        }
        Ok(Self::build(
            total as usize,
            1,
            Vec::new(),
            Vec::new(),
            histogram,
        ))
    }

    fn build(
        width: usize,
        height: usize,
        magnitude: Vec<u16>,
        direction: Vec<Orientation>,
        histogram: Vec<u64>,
    ) -> Self {
        let mut tail_counts = vec![0u64; histogram.len() + 1];
        for u in (0..histogram.len()).rev() {
            tail_counts[u] = tail_counts[u + 1] + histogram[u];
        }
        tail_counts.pop();
        let n_p = histogram
            .iter()
            .map(|&h| h as u128 * (h as u128).saturating_sub(1) / 2)
            .sum();
        let total = tail_counts[0];
        GradientStats {
            width,
            height,
            magnitude,
            direction,
            histogram,
            tail_counts,
            n_p,
            meaningful_length: meaningful_length(total),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Per-pixel magnitude bins (empty for [`GradientStats::from_histogram`]).
    pub fn magnitude(&self) -> &[u16] {
        &self.magnitude
    }

    pub fn direction(&self) -> &[Orientation] {
        &self.direction
    }

    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    /// Largest magnitude bin `N_h`.
    pub fn n_h(&self) -> u32 {
        (self.histogram.len() - 1) as u32
    }

    /// Number of unordered same-bin pixel pairs.
    pub fn n_p(&self) -> u128 {
        self.n_p
    }

    pub fn pixel_count(&self) -> u64 {
        self.tail_counts[0]
    }

    /// Pixels with magnitude >= `u`; zero past the last bin.
    pub fn tail_count(&self, u: u32) -> u64 {
        self.tail_counts.get(u as usize).copied().unwrap_or(0)
    }

    /// Fraction of pixels with magnitude >= `u`.
    pub fn tail(&self, u: u32) -> f64 {
        self.tail_count(u) as f64 / self.pixel_count() as f64
    }

    /// Length (in pixels) of the shortest edge segment that can be meaningful
    /// in an image of this size: the largest `L >= 1` with `8^L <= n^2`.
    pub fn meaningful_length(&self) -> u32 {
        self.meaningful_length
    }
}

fn meaningful_length(pixels: u64) -> u32 {
    let sq = pixels as u128 * pixels as u128;
    let mut len = 0u32;
    let mut pow = 8u128;
    while pow <= sq {
        len += 1;
        pow = match pow.checked_mul(8) {
            Some(p) => p,
            None => break,
        };
    }
    len.max(1)
}

/// Integer taps of the 5x5 pre-smoothing Gaussian (sigma 1.1). Fixed point
/// keeps the gradient exactly invariant to brightness offsets.
fn smoothing_taps() -> &'static [i64] {
    static TAPS: OnceLock<Vec<i64>> = OnceLock::new();
    TAPS.get_or_init(|| {
        let k = make_kernel(5).expect("size 5 is valid");
        k.profile()
            .iter()
            .map(|w| (w * 4096.0).round() as i64)
            .collect()
    })
}

pub fn gradient_stats(gray: &Raster) -> Result<GradientStats> {
    if gray.channels() != 1 {
        return Err(Error::ChannelMismatch(format!(
            "gradient statistics need a single-channel image, got {} channels",
            gray.channels()
        )));
    }
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    if w < 3 || h < 3 {
        return Err(Error::InvalidDimensions(format!(
            "edge detection needs both sides >= 3, got {w}x{h}"
        )));
    }
    let taps = smoothing_taps();
    let r = (taps.len() / 2) as isize;
    let scale: i64 = taps.iter().sum::<i64>().pow(2);
    let src = gray.data();

    let mut tmp = vec![0i64; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (-r..=r)
                .zip(taps)
                .map(|(d, &t)| t * src[y * w + reflect101(x as isize + d, w)] as i64)
                .sum();
        }
    }
    let mut smooth = vec![0i64; w * h];
    for y in 0..h {
        for x in 0..w {
            smooth[y * w + x] = (-r..=r)
                .zip(taps)
                .map(|(d, &t)| t * tmp[reflect101(y as isize + d, h) * w + x])
                .sum();
        }
    }

    let at = |x: isize, y: isize| smooth[reflect101(y, h) * w + reflect101(x, w)];
    let mut magnitude = Vec::with_capacity(w * h);
    let mut direction = Vec::with_capacity(w * h);
    let mut histogram = vec![0u64; MAGNITUDE_BINS as usize + 1];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            let l2 = ((gx as f64).powi(2) + (gy as f64).powi(2)).sqrt() / scale as f64;
            let bin =
                (l2.min(MAGNITUDE_CLAMP) * MAGNITUDE_BINS as f64 / MAGNITUDE_CLAMP).round() as u16;
            histogram[bin as usize] += 1;
            magnitude.push(bin);
            direction.push(Orientation::from_gradient(gx, gy));
        }
    }
    Ok(GradientStats::build(w, h, magnitude, direction, histogram))
}
