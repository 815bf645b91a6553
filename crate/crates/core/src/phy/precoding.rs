use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Unit-norm transmit weight vector W_u per group member.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecodingWeights {
    columns: Vec<Vec<Complex64>>,
}

impl PrecodingWeights {
    pub fn from_columns(columns: Vec<Vec<Complex64>>) -> Result<Self> {
        let m = columns.first().map(Vec::len).ok_or(Error::Empty("precoding weights"))?;
        if m == 0 || columns.iter().any(|c| c.len() != m) {
            return Err(Error::Dimension("weight vectors must share a nonzero length".into()));
        }
        Ok(Self { columns })
    }

    pub fn num_members(&self) -> usize {
        self.columns.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.columns[0].len()
    }

    pub fn member(&self, idx: usize) -> &[Complex64] {
        &self.columns[idx]
    }

    pub fn columns(&self) -> &[Vec<Complex64>] {
        &self.columns
    }
}

/// Regularized channel inversion: W = (H·Hᴴ + α·I)⁻¹·H with α = G·σ²/P_tot,
/// each column scaled to unit norm.
///
/// Evaluated through the equivalent G×G form H·(Hᴴ·H + α·I)⁻¹, which stays
/// well defined for α = 0 as long as the member channels are independent.
pub fn minmse_weights(
    channels: &[&[Complex64]],
    noise_power: f64,
    total_power: f64,
) -> Result<PrecodingWeights> {
    let g = channels.len();
    if g == 0 {
        return Err(Error::Empty("precoding group"));
    }
    let m = channels[0].len();
    if m == 0 || channels.iter().any(|h| h.len() != m) {
        return Err(Error::Dimension("member channels must share a nonzero length".into()));
    }
    if g > m {
        return Err(Error::Dimension(format!("group of {g} exceeds {m} antennas")));
    }
    if !(noise_power >= 0.0) || !(total_power > 0.0) {
        return Err(Error::config("MinMSE needs sigma^2 >= 0 and P_tot > 0"));
    }
    let alpha = g as f64 * noise_power / total_power;

    let h = DMatrix::from_fn(m, g, |i, j| channels[j][i]);
    let gram = h.adjoint() * &h + DMatrix::<Complex64>::identity(g, g) * Complex64::new(alpha, 0.0);

    let scale = (0..g).map(|i| gram[(i, i)].re).fold(0.0_f64, f64::max);
    let chol = gram.cholesky().ok_or(Error::DegenerateInversion)?;
    let l = chol.l_dirty();
    let min_pivot = (0..g).map(|i| l[(i, i)].norm_sqr()).fold(f64::INFINITY, f64::min);
    if !(scale > 0.0) || min_pivot <= 1e-12 * scale {
        return Err(Error::DegenerateInversion);
    }
    let raw = h * chol.inverse();

    let columns = (0..g)
        .map(|j| {
            let col = raw.column(j);
            let norm = col.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::DegenerateInversion);
            }
            Ok(col.iter().map(|w| w / norm).collect())
        })
        .collect::<Result<Vec<Vec<Complex64>>>>()?;
    Ok(PrecodingWeights { columns })
}
