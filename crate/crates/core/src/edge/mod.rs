//! Auto-threshold Canny edge detection.
//!
//! Thresholds come from the image itself: the gradient-magnitude histogram
//! gives, for every magnitude `u`, the number of false alarms expected if
//! pixels at least that strong were pure noise. The low threshold is the
//! weakest magnitude that is meaningful at level 1; the high threshold tightens
//! that level to `1 / lambda_v`.

mod canny;
mod gradient;
mod nfa;

pub use canny::{canny_auto, canny_auto_with, EdgeMap};
pub use gradient::{gradient_stats, GradientStats, Orientation, MAGNITUDE_BINS};
pub use nfa::{auto_thresholds, nfa, nfa_ratio, segment_nfa, NfaThresholds};

/// Default vision-meaningful parameter.
pub const DEFAULT_LAMBDA_V: f64 = 670.0;
