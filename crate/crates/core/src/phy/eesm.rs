use crate::{Error, Result};

/// Exponential effective SINR mapping:
/// γ_eff = −β·ln((1/N)·Σ exp(−γ_n/β)).
///
/// Evaluated around the smallest sample so large SINRs do not underflow.
pub fn eesm_effective_sinr(samples: &[f64], beta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("EESM sample list"));
    }
    if !(beta > 0.0) {
        return Err(Error::config("EESM beta must be positive"));
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min >= 0.0) {
        return Err(Error::config("SINR samples must be non-negative"));
    }
    let mean = samples.iter().map(|g| (-(g - min) / beta).exp()).sum::<f64>() / samples.len() as f64;
    // mean ∈ (1/N, 1], so the correction term lies in [0, β·ln N)
    Ok(min - beta * mean.ln())
}
