//! DL-MAP size model and the initial vertical limit.

use serde::{Deserialize, Serialize};

use super::FrameGeometry;

/// DL-MAP information-element model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Fixed MAP overhead in bits (header, frame number, counts, CRC).
    pub fixed_bits: u32,
    /// Bits per information element; one IE per burst member allocation.
    pub ie_bits: u32,
    pub repetition: u32,
    /// Packet size the MAP prediction assumes.
    pub prediction_packet_bytes: u32,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            fixed_bits: 88,
            ie_bits: 60,
            repetition: 1,
            prediction_packet_bytes: 40,
        }
    }
}

/// MAP sizing with the payload of the MCS the MAP is sent with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapModel {
    pub fixed_bits: u32,
    pub ie_bits: u32,
    pub repetition: u32,
    /// Payload per slot of the MAP's MCS (QPSK 1/2: 6 bytes).
    pub bytes_per_slot: u32,
}

impl MapModel {
    pub fn new(cfg: &MapConfig, map_bytes_per_slot: u32) -> Self {
        Self {
            fixed_bits: cfg.fixed_bits,
            ie_bits: cfg.ie_bits,
            repetition: cfg.repetition.max(1),
            bytes_per_slot: map_bytes_per_slot,
        }
    }

    pub fn bits(&self, ie_count: usize) -> u64 {
        self.fixed_bits as u64 + ie_count as u64 * self.ie_bits as u64
    }

    /// Slots occupied by a MAP with `ie_count` information elements.
    pub fn size_slots(&self, ie_count: usize) -> usize {
        let bits = self.bits(ie_count) * self.repetition as u64;
        bits.div_ceil(8 * self.bytes_per_slot as u64) as usize
    }

    /// The MAP fills whole columns from the left edge.
    pub fn columns(&self, ie_count: usize, subchannels: usize) -> usize {
        self.size_slots(ie_count).div_ceil(subchannels)
    }

    /// Number of `prediction_bytes` packets that fit into SC slots at the
    /// average payload per slot.
    pub fn predicted_ie_count(&self, geometry: &FrameGeometry, avg_bytes_per_slot: f64, prediction_bytes: u32) -> usize {
        (geometry.subchannels as f64 * avg_bytes_per_slot / prediction_bytes as f64).floor() as usize
    }

    /// Predicted MAP size in slots per spatial layer.
    pub fn predict_size_slots(&self, geometry: &FrameGeometry, avg_bytes_per_slot: f64, prediction_bytes: u32) -> usize {
        self.size_slots(self.predicted_ie_count(geometry, avg_bytes_per_slot, prediction_bytes))
    }
}

/// Predicted MAP size (slots per spatial layer) for a frame where SC slots
/// at the average MCS are filled with `prediction_bytes` packets, each
/// needing its own IE.
pub fn predict_map_size(
    geometry: &FrameGeometry,
    avg_bytes_per_slot: f64,
    model: &MapModel,
    prediction_bytes: u32,
) -> usize {
    model.predict_size_slots(geometry, avg_bytes_per_slot, prediction_bytes)
}

/// Initial vertical limit in full columns:
///
/// initSz = ⌈((DL_sl − 1)·SC/MSB − Map*·M) / SC · SB⌉
///
/// evaluated in exact integer arithmetic. Non-positive results are clamped
/// to one column.
pub fn initial_vertical_limit(geometry: &FrameGeometry, num_antennas: usize, map_star_slots: usize) -> usize {
    let dl = geometry.dl_columns as i64;
    let sc = geometry.subchannels as i64;
    let msb = geometry.max_subbands as i64;
    let sb = geometry.subbands as i64;
    let num = ((dl - 1) * sc - map_star_slots as i64 * num_antennas as i64 * msb) * sb;
    let den = msb * sc;
    let init = num.div_euclid(den) + i64::from(num.rem_euclid(den) != 0);
    if init < 1 {
        log::warn!(
            "initial vertical limit {init} clamped to one column (Map*={map_star_slots}, M={num_antennas})"
        );
        1
    } else {
        init as usize
    }
}
