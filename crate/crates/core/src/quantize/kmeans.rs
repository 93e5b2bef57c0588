use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

pub const MAX_COLORS: usize = 256;

/// K-means stopping rule and seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once the largest squared centroid shift falls below this.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: 128,
            seed: 0,
            max_iters: 30,
            tol: 1e-3,
        }
    }
}

/// `k` representative colors fitted to a pixel set.
#[derive(Clone, Debug, PartialEq)]
pub struct Palette {
    channels: usize,
    colors: Vec<f64>,
    inertia: f64,
    seed: u64,
    iterations: usize,
}

impl Palette {
    /// Palette from explicit centroids (flat, `channels` values per color).
    pub fn from_colors(channels: usize, colors: Vec<f64>) -> Result<Self> {
        if channels == 0 || colors.is_empty() || !colors.len().is_multiple_of(channels) {
            return Err(Error::param("colors", "need a whole number of colors"));
        }
        let k = colors.len() / channels;
        if k > MAX_COLORS {
            return Err(Error::param(
                "k",
                format!("at most {MAX_COLORS} colors, got {k}"),
            ));
        }
        Ok(Palette {
            channels,
            colors,
            inertia: 0.0,
            seed: 0,
            iterations: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.colors.len() / self.channels
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn color(&self, i: usize) -> &[f64] {
        &self.colors[i * self.channels..(i + 1) * self.channels]
    }

    pub fn colors(&self) -> impl Iterator<Item = &[f64]> {
        self.colors.chunks_exact(self.channels)
    }

    /// Total squared distance of the fitted pixels to their centroids.
    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Lloyd iterations performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    #[inline]
    pub fn nearest(&self, px: &[u8]) -> (usize, f64) {
        nearest(&self.colors, self.channels, px)
    }
}

#[inline]
fn nearest(centroids: &[f64], dim: usize, px: &[u8]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d: f64 = c
            .iter()
            .zip(px)
            .map(|(&a, &b)| (a - b as f64).powi(2))
            .sum();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Fits a palette with k-means++ seeding and Lloyd iterations.
///
/// `pixels` holds `channels` interleaved samples per point. The result is a
/// pure function of `(pixels, channels, params)`.
pub fn kmeans_fit(pixels: &[u8], channels: usize, params: &KMeansParams) -> Result<Palette> {
    kmeans_fit_traced(pixels, channels, params).map(|(p, _)| p)
}

/// [`kmeans_fit`] plus the inertia after every assignment step.
pub fn kmeans_fit_traced(
    pixels: &[u8],
    channels: usize,
    params: &KMeansParams,
) -> Result<(Palette, Vec<f64>)> {
    if channels == 0 || !pixels.len().is_multiple_of(channels) {
        return Err(Error::ChannelMismatch(format!(
            "{} samples do not split into {channels}-channel pixels",
            pixels.len()
        )));
    }
    if pixels.is_empty() {
        return Err(Error::EmptyInput("no pixels to cluster".into()));
    }
    if params.k == 0 || params.k > MAX_COLORS {
        return Err(Error::param(
            "k",
            format!("must be within 1..={MAX_COLORS}, got {}", params.k),
        ));
    }
    if params.max_iters == 0 {
        return Err(Error::param("max_iters", "must be at least 1"));
    }
    if params.tol.is_nan() || params.tol < 0.0 {
        return Err(Error::param("tol", "must be non-negative"));
    }
    let dim = channels;
    let n = pixels.len() / dim;
    let k = params.k;
    let mut centroids = plus_plus_init(pixels, dim, k, params.seed);

    let mut labels = vec![0usize; n];
    let mut dist = vec![0f64; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut inertia = assign(pixels, dim, &centroids, &mut labels, &mut dist);
    history.push(inertia);

    while iterations < params.max_iters {
        iterations += 1;
        let mut sums = vec![0u64; k * dim];
        let mut counts = vec![0u64; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for c in 0..dim {
                sums[l * dim + c] += pixels[i * dim + c] as u64;
            }
        }
        let mut next = centroids.clone();
        for j in 0..k {
            if counts[j] > 0 {
                for c in 0..dim {
                    next[j * dim + c] = sums[j * dim + c] as f64 / counts[j] as f64;
                }
            }
        }
        // Empty clusters move onto the currently worst-served point.
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let (far, &d) =
                dist.iter().enumerate().fold(
                    (0, &-1.0),
                    |best, (i, d)| if *d > *best.1 { (i, d) } else { best },
                );
            if d <= 0.0 {
                break;
            }
            for c in 0..dim {
                next[j * dim + c] = pixels[far * dim + c] as f64;
            }
            dist[far] = 0.0;
        }
        let shift = centroids
            .chunks_exact(dim)
            .zip(next.chunks_exact(dim))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
            .fold(0.0, f64::max);
        centroids = next;
        inertia = assign(pixels, dim, &centroids, &mut labels, &mut dist);
        history.push(inertia);
        if shift < params.tol {
            break;
        }
    }

    let palette = Palette {
        channels: dim,
        colors: centroids,
        inertia,
        seed: params.seed,
        iterations,
    };
    Ok((palette, history))
}

/// Assigns every point to its nearest centroid; returns the total squared
/// distance, summed in point order.
fn assign(
    pixels: &[u8],
    dim: usize,
    centroids: &[f64],
    labels: &mut [usize],
    dist: &mut [f64],
) -> f64 {
    labels
        .par_iter_mut()
        .zip(dist.par_iter_mut())
        .zip(pixels.par_chunks_exact(dim))
        .for_each(|((l, d), px)| {
            let (j, dd) = nearest(centroids, dim, px);
            *l = j;
            *d = dd;
        });
    dist.iter().sum()
}

fn plus_plus_init(pixels: &[u8], dim: usize, k: usize, seed: u64) -> Vec<f64> {
    let n = pixels.len() / dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |i: usize| pixels[i * dim..(i + 1) * dim].iter().map(|&v| v as f64);
    let mut centroids: Vec<f64> = point(rng.random_range(0..n)).collect();
    let sq = |i: usize, c: &[f64]| -> f64 {
        pixels[i * dim..(i + 1) * dim]
            .iter()
            .zip(c)
            .map(|(&p, &q)| (p as f64 - q).powi(2))
            .sum()
    };
    let mut d2: Vec<f64> = (0..n).map(|i| sq(i, &centroids[..dim])).collect();
    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            // every point already coincides with a centroid
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    chosen = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            chosen.expect("positive total has a positive entry")
        };
        let start = centroids.len();
        centroids.extend(point(pick));
        let c = centroids[start..].to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq(i, &c));
        }
    }
    centroids
}
