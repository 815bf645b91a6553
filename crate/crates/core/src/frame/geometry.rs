use std::ops::Range;

use crate::{Error, Result};

/// Downlink subframe as a grid of subchannel rows × slot columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameGeometry {
    /// SC: subchannel rows.
    pub subchannels: usize,
    /// DL_sl: slot columns.
    pub dl_columns: usize,
    /// SB: subbands in use.
    pub subbands: usize,
    /// MSB: largest subband count the deployment supports.
    pub max_subbands: usize,
}

impl FrameGeometry {
    pub fn new(subchannels: usize, dl_columns: usize, subbands: usize, max_subbands: usize) -> Result<Self> {
        let g = Self {
            subchannels,
            dl_columns,
            subbands,
            max_subbands,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subchannels == 0 {
            return Err(Error::config("frame needs at least one subchannel"));
        }
        if self.dl_columns < 2 {
            return Err(Error::config("frame needs at least two slot columns"));
        }
        if self.subbands == 0 || self.subbands > self.max_subbands {
            return Err(Error::config(format!(
                "subband count {} outside 1..={}",
                self.subbands, self.max_subbands
            )));
        }
        if self.subchannels % self.subbands != 0 {
            return Err(Error::config(format!(
                "{} subchannels cannot be split into {} equal subbands",
                self.subchannels, self.subbands
            )));
        }
        Ok(())
    }

    /// SCSB: subchannels per subband.
    pub fn subchannels_per_subband(&self) -> usize {
        self.subchannels / self.subbands
    }

    pub fn frame_size_slots(&self) -> usize {
        self.subchannels * self.dl_columns
    }
}

/// A contiguous block of subchannel rows and the adjacent subcarriers they
/// map to (adjacent subcarrier allocation).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubbandSpec {
    pub index: usize,
    pub rows: Range<usize>,
    /// 0-based subcarrier range.
    pub subcarriers: Range<usize>,
}

/// First subcarrier of subchannel `row` when S subcarriers are spread over
/// SC adjacent subchannels.
fn subchannel_start(row: usize, subchannels: usize, num_subcarriers: usize) -> usize {
    row * num_subcarriers / subchannels
}

pub fn partition_frame(geometry: &FrameGeometry, num_subcarriers: usize) -> Result<Vec<SubbandSpec>> {
    geometry.validate()?;
    if num_subcarriers < geometry.subchannels {
        return Err(Error::config(format!(
            "{} subcarriers cannot carry {} subchannels",
            num_subcarriers, geometry.subchannels
        )));
    }
    let scsb = geometry.subchannels_per_subband();
    Ok((0..geometry.subbands)
        .map(|j| {
            let rows = j * scsb..(j + 1) * scsb;
            let subcarriers = subchannel_start(rows.start, geometry.subchannels, num_subcarriers)
                ..subchannel_start(rows.end, geometry.subchannels, num_subcarriers);
            SubbandSpec {
                index: j,
                rows,
                subcarriers,
            }
        })
        .collect())
}
