use super::gradient::GradientStats;
use crate::{Error, Result};

/// Low and high hysteresis thresholds in magnitude-bin units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NfaThresholds {
    pub lambda_v: f64,
    pub t_low: u32,
    pub t_high: u32,
}

fn check_bin(stats: &GradientStats, u: u32) -> Result<()> {
    if u > stats.n_h() {
        return Err(Error::param(
            "u",
            format!("magnitude bin {u} is outside 0..={}", stats.n_h()),
        ));
    }
    Ok(())
}

/// Number of false alarms at magnitude `u`: `N_p * P(u)`, where `P(u)` is the
/// fraction of pixels whose magnitude is at least `u`.
pub fn nfa(stats: &GradientStats, u: u32) -> Result<f64> {
    check_bin(stats, u)?;
    Ok(stats.n_p() as f64 * stats.tail(u))
}

/// [`nfa`] as an exact fraction `(numerator, denominator)`.
pub fn nfa_ratio(stats: &GradientStats, u: u32) -> Result<(u128, u128)> {
    check_bin(stats, u)?;
    Ok((
        stats.n_p() * stats.tail_count(u) as u128,
        stats.pixel_count() as u128,
    ))
}

/// False alarms for a run of `meaningful_length` pixels that all reach
/// magnitude `u`, treating pixels as independent: `N_p * P(u)^L`.
///
/// For images under 8 pixels `L = 1` and this is [`nfa`].
pub fn segment_nfa(stats: &GradientStats, u: u32) -> Result<f64> {
    check_bin(stats, u)?;
    let len = stats.meaningful_length();
    if len == 1 {
        return nfa(stats, u);
    }
    let p = stats.tail(u);
    if p == 0.0 {
        return Ok(0.0);
    }
    // log domain: n_p * p^L overflows nothing but loses precision for large L
    Ok(((stats.n_p() as f64).ln() + len as f64 * p.ln()).exp())
}

/// Derives hysteresis thresholds from the gradient statistics.
///
/// `t_low` is the smallest magnitude whose segment NFA is at most 1 (the
/// minimal meaningful magnitude); `t_high` the smallest whose NFA is at most
/// `1 / lambda_v`. A condition no bin satisfies yields `N_h`.
pub fn auto_thresholds(stats: &GradientStats, lambda_v: f64) -> Result<NfaThresholds> {
    if !lambda_v.is_finite() || lambda_v < 1.0 {
        return Err(Error::param(
            "lambda_v",
            format!("must be a finite value >= 1, got {lambda_v}"),
        ));
    }
    let n_h = stats.n_h();
    let mut t_low = None;
    let mut t_high = None;
    for u in 0..=n_h {
        let v = segment_nfa(stats, u)?;
        if t_low.is_none() && v <= 1.0 {
            t_low = Some(u);
        }
        if v * lambda_v <= 1.0 {
            t_high = Some(u);
            break;
        }
    }
    let t_low = t_low.unwrap_or(n_h);
    Ok(NfaThresholds {
        lambda_v,
        t_low,
        t_high: t_high.unwrap_or(n_h).max(t_low),
    })
}
