//! Adversarial-perturbation suppression for 8-bit images.
//!
//! The defense is a three-stage pipeline:
//!
//! 1. [`edge::canny_auto`] finds edges with thresholds derived from the image's own
//!    gradient-magnitude statistics (number-of-false-alarms test), so no manual
//!    low/high thresholds are needed.
//! 2. [`smooth::adaptive_gaussian`] blurs every pixel with one kernel from a
//!    [`smooth::KernelBank`], picked from the soft (blurred) edge map: small kernels
//!    near edges, large kernels in flat regions.
//! 3. [`quantize::reduce_colors`] repaints the smoothed image with `k` K-means colors.
//!
//! The baseline defenses (bit-depth reduction, JPEG-style DCT quantization, median
//! and Gaussian smoothing, GK-means) live next to it so ablations can compare them
//! on equal footing. [`pipeline::PipelineConfig`] ties every stage together and is
//! what the `perturbshield` CLI drives.
//!
//! ```
//! use perturbshield::pipeline::{defend, PipelineConfig};
//! use perturbshield::raster::{ColorSpace, Raster};
//!
//! let img = Raster::new(16, 16, ColorSpace::Rgb, vec![90; 16 * 16 * 3]).unwrap();
//! let out = defend(&img, &PipelineConfig::default()).unwrap();
//! assert_eq!(out.image, img);
//! ```

pub mod border;
pub mod cli;
pub mod codec;
pub mod edge;
mod error;
pub mod pipeline;
pub mod quantize;
pub mod raster;
pub mod smooth;
pub mod sweep;

pub use error::{Error, Result};
pub use raster::{ColorSpace, Raster};
