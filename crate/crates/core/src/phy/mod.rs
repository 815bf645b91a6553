//! Link-level abstraction: precoding, per-resource SINR, EESM compression
//! and MCS selection.

mod eesm;
mod mcs;
mod precoding;
mod sinr;

pub use eesm::eesm_effective_sinr;
pub use mcs::{
    payload_bytes, select_mcs, slot_capacity_bytes, McsEntry, McsSelection, McsTable,
    DATA_SYMBOLS_PER_SLOT,
};
pub use precoding::{minmse_weights, PrecodingWeights};
pub use sinr::{beam_gain, compute_sinr};

use num_complex::Complex64;

use crate::Result;

/// Link state of one group member over a subband.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkResult {
    /// γ per CSI sample (linear).
    pub sinr_samples: Vec<f64>,
    pub effective_sinr: f64,
    pub mcs: Option<usize>,
}

/// Precoders and link results of a whole group on one subband.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupLink {
    /// One set of weights per CSI sample.
    pub weights: Vec<PrecodingWeights>,
    /// One entry per member, in member order.
    pub links: Vec<LinkResult>,
}

/// Evaluates a group over `num_samples` CSI samples. `channel(member, b)`
/// returns member `member`'s channel vector at sample `b`. Transmit power is
/// split equally over the members.
pub fn evaluate_group_link<'a, F>(
    num_members: usize,
    num_samples: usize,
    channel: F,
    noise_power: f64,
    total_power: f64,
    table: &McsTable,
) -> Result<GroupLink>
where
    F: Fn(usize, usize) -> &'a [Complex64],
{
    let per_member_power = total_power / num_members as f64;
    let mut weights = Vec::with_capacity(num_samples);
    let mut sinr = vec![Vec::with_capacity(num_samples); num_members];
    for b in 0..num_samples {
        let hs: Vec<&[Complex64]> = (0..num_members).map(|u| channel(u, b)).collect();
        let w = minmse_weights(&hs, noise_power, total_power)?;
        for (u, g) in compute_sinr(&w, &hs, per_member_power, noise_power)?.into_iter().enumerate() {
            sinr[u].push(g);
        }
        weights.push(w);
    }
    let links = sinr
        .into_iter()
        .map(|samples| {
            let sel = select_mcs(&samples, table)?;
            Ok(LinkResult {
                sinr_samples: samples,
                effective_sinr: sel.effective_sinr,
                mcs: sel.mcs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupLink { weights, links })
}
