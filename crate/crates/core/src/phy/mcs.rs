use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eesm_effective_sinr;
use crate::{Error, Result};

/// Data symbols carried by one slot (one subchannel × one column).
pub const DATA_SYMBOLS_PER_SLOT: u32 = 48;

/// Slot payload in bytes for a modulation order and code rate.
pub fn payload_bytes(bits_per_symbol: u32, rate_num: u32, rate_den: u32) -> u32 {
    DATA_SYMBOLS_PER_SLOT * bits_per_symbol * rate_num / (8 * rate_den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsEntry {
    pub name: String,
    /// Minimum effective SINR in dB.
    #[serde(rename = "threshold_db")]
    pub min_effective_sinr_db: f64,
    pub bytes_per_slot: u32,
    #[serde(rename = "beta")]
    pub eesm_beta: f64,
}

impl McsEntry {
    pub fn threshold_linear(&self) -> f64 {
        10f64.powf(self.min_effective_sinr_db / 10.0)
    }
}

/// Ordered MCS table, most robust entry first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    #[serde(rename = "mcs")]
    entries: Vec<McsEntry>,
}

impl McsTable {
    /// Thresholds must increase strictly and payloads must not decrease.
    pub fn new(entries: Vec<McsEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::McsTable("table is empty".into()));
        }
        for e in &entries {
            if e.bytes_per_slot == 0 || !(e.eesm_beta > 0.0) || !e.min_effective_sinr_db.is_finite() {
                return Err(Error::McsTable(format!("entry {} has non-positive fields", e.name)));
            }
        }
        for pair in entries.windows(2) {
            if pair[1].min_effective_sinr_db <= pair[0].min_effective_sinr_db {
                return Err(Error::McsTable(format!(
                    "thresholds not strictly increasing at {}",
                    pair[1].name
                )));
            }
            if pair[1].bytes_per_slot < pair[0].bytes_per_slot {
                return Err(Error::McsTable(format!(
                    "bytes per slot decrease at {}",
                    pair[1].name
                )));
            }
        }
        Ok(Self { entries })
    }

    /// 802.16 PUSC payloads, QPSK 1/2 through 64QAM 3/4. Thresholds are
    /// calibration values.
    pub fn wimax_default() -> Self {
        let rows: [(&str, u32, u32, u32, f64, f64); 7] = [
            ("QPSK 1/2", 2, 1, 2, 3.0, 1.49),
            ("QPSK 3/4", 2, 3, 4, 6.0, 1.57),
            ("16QAM 1/2", 4, 1, 2, 8.5, 3.45),
            ("16QAM 3/4", 4, 3, 4, 11.5, 4.56),
            ("64QAM 1/2", 6, 1, 2, 15.0, 9.52),
            ("64QAM 2/3", 6, 2, 3, 18.5, 11.0),
            ("64QAM 3/4", 6, 3, 4, 21.0, 13.8),
        ];
        let entries = rows
            .iter()
            .map(|&(name, bits, num, den, thr, beta)| McsEntry {
                name: name.to_string(),
                min_effective_sinr_db: thr,
                bytes_per_slot: payload_bytes(bits, num, den),
                eesm_beta: beta,
            })
            .collect();
        Self::new(entries).expect("built-in MCS table is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: McsTable = toml::from_str(text).map_err(|e| Error::McsTable(e.to_string()))?;
        Self::new(raw.entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn get(&self, idx: usize) -> &McsEntry {
        &self.entries[idx]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The most robust entry; the DL-MAP is always sent with it.
    pub fn most_robust(&self) -> &McsEntry {
        &self.entries[0]
    }
}

impl Default for McsTable {
    fn default() -> Self {
        Self::wimax_default()
    }
}

pub fn slot_capacity_bytes(mcs: &McsEntry) -> u32 {
    mcs.bytes_per_slot
}

/// Outcome of link adaptation for one member.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McsSelection {
    /// Index into the table, `None` when even the most robust entry fails.
    pub mcs: Option<usize>,
    /// Effective SINR (linear) under the chosen entry's β, or under the most
    /// robust entry's β when nothing fits.
    pub effective_sinr: f64,
}

/// Scans from the highest to the lowest MCS and takes the first whose
/// threshold is met by the EESM value computed with that entry's β.
pub fn select_mcs(samples: &[f64], table: &McsTable) -> Result<McsSelection> {
    for (idx, entry) in table.entries().iter().enumerate().rev() {
        let eff = eesm_effective_sinr(samples, entry.eesm_beta)?;
        if eff >= entry.threshold_linear() {
            return Ok(McsSelection {
                mcs: Some(idx),
                effective_sinr: eff,
            });
        }
    }
    Ok(McsSelection {
        mcs: None,
        effective_sinr: eesm_effective_sinr(samples, table.most_robust().eesm_beta)?,
    })
}
