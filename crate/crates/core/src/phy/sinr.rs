use num_complex::Complex64;

use super::PrecodingWeights;
use crate::{Error, Result};

/// |Wᴴ·H|²
pub fn beam_gain(weight: &[Complex64], channel: &[Complex64]) -> f64 {
    weight
        .iter()
        .zip(channel)
        .map(|(w, h)| w.conj() * h)
        .sum::<Complex64>()
        .norm_sqr()
}

/// Per-member SINR on one frequency resource:
///
/// γ_u = P·|W_uᴴ·H_u|² / (σ² + Σ_{v≠u} P·|W_vᴴ·H_u|²)
///
/// `per_member_power` is the common received-power scaling of every member.
pub fn compute_sinr(
    weights: &PrecodingWeights,
    channels: &[&[Complex64]],
    per_member_power: f64,
    noise_power: f64,
) -> Result<Vec<f64>> {
    if !(noise_power > 0.0) {
        return Err(Error::config("noise power must be positive"));
    }
    if !(per_member_power >= 0.0) {
        return Err(Error::config("member power must be non-negative"));
    }
    let g = weights.num_members();
    if channels.len() != g {
        return Err(Error::Dimension(format!(
            "{} channels for {} weight vectors",
            channels.len(),
            g
        )));
    }
    if channels.iter().any(|h| h.len() != weights.num_antennas()) {
        return Err(Error::Dimension("channel length differs from weight length".into()));
    }
    Ok((0..g)
        .map(|u| {
            let mut signal = 0.0;
            let mut interference = 0.0;
            for v in 0..g {
                let gain = per_member_power * beam_gain(weights.member(v), channels[u]);
                if v == u {
                    signal = gain;
                } else {
                    interference += gain;
                }
            }
            signal / (noise_power + interference)
        })
        .collect())
}
