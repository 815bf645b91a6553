use crate::grouping::SdmaGroup;
use crate::qos::{CandidateList, PacketId};
use crate::MsIndex;

/// Identifies a burst: group `group` of subband `subband`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BurstKey {
    pub subband: usize,
    pub group: usize,
}

/// One member's share of a burst: one spatial layer, one MAP IE.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberAllocation {
    pub ms: MsIndex,
    pub mcs: Option<usize>,
    pub bytes_per_slot: u32,
    pub packets: Vec<PacketId>,
    /// Positions of the packets in the candidate list.
    pub candidate_indices: Vec<usize>,
    pub slots_used: usize,
    pub bytes: u64,
    pub utility: f64,
}

/// A group's rectangular allocation spanning whole columns of its subband.
#[derive(Clone, Debug, PartialEq)]
pub struct Burst {
    pub subband: usize,
    pub group: usize,
    /// Packed width in columns.
    pub columns: usize,
    /// Leftmost column; assigned when the frame is laid out.
    pub first_column: usize,
    /// Members with at least one packed packet.
    pub members: Vec<MemberAllocation>,
    pub utility: f64,
}

impl Burst {
    pub fn key(&self) -> BurstKey {
        BurstKey {
            subband: self.subband,
            group: self.group,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// MAP IEs this burst needs.
    pub fn ie_count(&self) -> usize {
        self.members.len()
    }

    pub fn column_range(&self) -> std::ops::Range<usize> {
        self.first_column..self.first_column + self.columns
    }

    pub fn bytes(&self) -> u64 {
        self.members.iter().map(|m| m.bytes).sum()
    }

    pub fn packet_ids(&self) -> impl Iterator<Item = PacketId> + '_ {
        self.members.iter().flat_map(|m| m.packets.iter().copied())
    }
}

/// Which burst currently holds each candidate packet.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FreezeRegistry {
    owners: Vec<Option<BurstKey>>,
}

impl FreezeRegistry {
    pub fn new(num_candidates: usize) -> Self {
        Self {
            owners: vec![None; num_candidates],
        }
    }

    pub fn owner(&self, candidate: usize) -> Option<BurstKey> {
        self.owners.get(candidate).copied().flatten()
    }

    /// True when the packet is held by a burst other than `key`.
    pub fn frozen_for(&self, candidate: usize, key: BurstKey) -> bool {
        matches!(self.owner(candidate), Some(k) if k != key)
    }

    /// Releases everything `previous` held and freezes the packets of `burst`.
    pub fn assign(&mut self, previous: Option<&Burst>, burst: &Burst) {
        if let Some(prev) = previous {
            self.release(prev);
        }
        let key = burst.key();
        for m in &burst.members {
            for &i in &m.candidate_indices {
                self.owners[i] = Some(key);
            }
        }
    }

    pub fn release(&mut self, burst: &Burst) {
        let key = burst.key();
        for m in &burst.members {
            for &i in &m.candidate_indices {
                if self.owners[i] == Some(key) {
                    self.owners[i] = None;
                }
            }
        }
    }

    pub fn frozen_count(&self) -> usize {
        self.owners.iter().filter(|o| o.is_some()).count()
    }
}

/// Slots a packet needs at `bytes_per_slot`; the last slot is padded.
pub fn slots_for(size: u32, bytes_per_slot: u32) -> usize {
    size.div_ceil(bytes_per_slot) as usize
}

/// Packs `columns` whole columns of the group's subband without touching the
/// registry. Each member gets `columns × scsb` slots and takes its packets in
/// candidate order, first-fit, skipping packets frozen by other bursts.
pub fn plan_group_area(
    group: &SdmaGroup,
    group_index: usize,
    columns: usize,
    scsb: usize,
    candidates: &CandidateList,
    frozen: &FreezeRegistry,
) -> Burst {
    let key = BurstKey {
        subband: group.subband,
        group: group_index,
    };
    let capacity = columns * scsb;
    let mut members = Vec::new();
    for (pos, &ms) in group.members.iter().enumerate() {
        let bps = group.bytes_per_slot.get(pos).copied().unwrap_or(0);
        if bps == 0 {
            continue;
        }
        let mut alloc = MemberAllocation {
            ms,
            mcs: group.links.get(pos).and_then(|l| l.mcs),
            bytes_per_slot: bps,
            packets: Vec::new(),
            candidate_indices: Vec::new(),
            slots_used: 0,
            bytes: 0,
            utility: 0.0,
        };
        for &i in candidates.indices_of(ms) {
            if frozen.frozen_for(i, key) {
                continue;
            }
            let p = candidates.get(i);
            let need = slots_for(p.size, bps);
            if alloc.slots_used + need <= capacity {
                alloc.slots_used += need;
                alloc.bytes += p.size as u64;
                alloc.utility += p.utility;
                alloc.packets.push(p.id);
                alloc.candidate_indices.push(i);
            }
        }
        if !alloc.packets.is_empty() {
            members.push(alloc);
        }
    }
    let packed_columns = members
        .iter()
        .map(|m| m.slots_used.div_ceil(scsb))
        .max()
        .unwrap_or(0);
    let utility = members.iter().map(|m| m.utility).sum();
    Burst {
        subband: group.subband,
        group: group_index,
        columns: packed_columns,
        first_column: 0,
        members,
        utility,
    }
}

/// [`plan_group_area`] followed by freezing the packed packets to this
/// burst and releasing whatever `previous` held but no longer packs.
pub fn pack_group_area(
    group: &SdmaGroup,
    group_index: usize,
    columns: usize,
    scsb: usize,
    candidates: &CandidateList,
    frozen: &mut FreezeRegistry,
    previous: Option<&Burst>,
) -> Burst {
    let burst = plan_group_area(group, group_index, columns, scsb, candidates, frozen);
    frozen.assign(previous, &burst);
    burst
}
