//! Two-phase frame construction.
//!
//! The extension phase moves a vertical limit from the right edge toward
//! the column-wise growing DL-MAP. Each selection phase then repeatedly
//! schedules, over the subbands not yet served this round, the group whose
//! packing area up to the limit raises the frame utility the most.

use serde::{Deserialize, Serialize};

use super::map::{initial_vertical_limit, MapModel};
use super::packing::{plan_group_area, slots_for, Burst, FreezeRegistry};
use super::FrameGeometry;
use crate::grouping::GroupingResult;
use crate::qos::CandidateList;

/// How a subband that already holds a burst may be extended in later rounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionPolicy {
    /// Only the subband's scheduled group may grow.
    #[default]
    GrowOnly,
    /// Scheduled groups may grow and further groups may be added next to
    /// them in the subband's fresh area.
    AddOrGrow,
}

/// Which packet of an MS queue sets its minimum burst size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// The first packet in FIFO order.
    HeadOfLine,
    /// The smallest queued packet.
    #[default]
    SmallestPacket,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PackingParams {
    pub map: MapModel,
    /// Packet size behind the MAP-size prediction.
    pub prediction_packet_bytes: u32,
    /// BS antennas M.
    pub num_antennas: usize,
    pub policy: ExtensionPolicy,
    pub step_rule: StepRule,
    /// Fixes Map*_sz instead of predicting it from the groups' mean MCS.
    pub map_star_override: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MapRegion {
    pub columns: usize,
    pub slots: usize,
    pub ie_count: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PackingStats {
    /// Tentative util(frame ∪ G) evaluations.
    pub util_evaluations: u64,
    pub rounds: usize,
    pub accepted: usize,
    pub map_star_slots: usize,
    pub initial_columns: usize,
    pub initial_step_slots: usize,
}

/// A constructed downlink subframe.
#[derive(Clone, Debug, PartialEq)]
pub struct OfdmaFrame {
    pub geometry: FrameGeometry,
    pub map: MapRegion,
    /// Ordered by subband, then by creation within the subband.
    pub bursts: Vec<Burst>,
    pub utility: f64,
    /// Frame utility after every accepted burst update.
    pub utility_trace: Vec<f64>,
    pub stats: PackingStats,
}

impl OfdmaFrame {
    pub fn empty(geometry: FrameGeometry, map: &MapModel) -> Self {
        Self {
            geometry,
            map: MapRegion {
                columns: map.columns(0, geometry.subchannels),
                slots: map.size_slots(0),
                ie_count: 0,
            },
            bursts: Vec::new(),
            utility: 0.0,
            utility_trace: Vec::new(),
            stats: PackingStats::default(),
        }
    }

    pub fn packed_bytes(&self) -> u64 {
        self.bursts.iter().map(Burst::bytes).sum()
    }

    /// Widest packed subband in columns.
    pub fn max_packed_columns(&self) -> usize {
        let mut per = vec![0usize; self.geometry.subbands];
        for b in &self.bursts {
            per[b.subband] += b.columns;
        }
        per.into_iter().max().unwrap_or(0)
    }

    pub fn free_columns(&self) -> usize {
        self.geometry
            .dl_columns
            .saturating_sub(self.map.columns + self.max_packed_columns())
    }
}

/// Largest, over MSs, of the slots the MS's minimum burst needs at its best
/// MCS. `rule` picks the packet defining the minimum burst; packets that
/// cannot fit into an empty subband are passed over.
pub fn min_slot_size(
    candidates: &CandidateList,
    geometry: &FrameGeometry,
    map: &MapModel,
    rule: StepRule,
) -> Option<usize> {
    let scsb = geometry.subchannels_per_subband();
    let max_slots = geometry
        .dl_columns
        .saturating_sub(map.columns(0, geometry.subchannels))
        * scsb;
    (0..candidates.num_ms())
        .filter_map(|ms| {
            let bps = candidates.best_bytes_per_slot(ms)?;
            let mut fitting = candidates
                .indices_of(ms)
                .iter()
                .map(|&i| slots_for(candidates.get(i).size, bps))
                .filter(|&s| s <= max_slots);
            match rule {
                StepRule::HeadOfLine => fitting.next(),
                StepRule::SmallestPacket => fitting.min(),
            }
        })
        .max()
}

/// stepSize in slots: minSlotSize rounded up to whole subband columns.
pub fn initial_step_size(
    candidates: &CandidateList,
    geometry: &FrameGeometry,
    map: &MapModel,
    rule: StepRule,
) -> usize {
    let scsb = geometry.subchannels_per_subband();
    match min_slot_size(candidates, geometry, map, rule) {
        Some(s) => s.div_ceil(scsb).max(1) * scsb,
        None => scsb,
    }
}

/// Map*_sz from the override or the groups' mean payload per slot.
pub fn map_star(groups: &GroupingResult, geometry: &FrameGeometry, params: &PackingParams) -> usize {
    params.map_star_override.unwrap_or_else(|| {
        let avg = groups
            .mean_bytes_per_slot()
            .unwrap_or(params.map.bytes_per_slot as f64);
        params
            .map
            .predict_size_slots(geometry, avg, params.prediction_packet_bytes)
    })
}

struct Tentative {
    subband: usize,
    existing: Option<usize>,
    current_utility: f64,
    burst: Burst,
}

impl Tentative {
    fn gain(&self) -> f64 {
        self.burst.utility - self.current_utility
    }
}

struct FrameBuilder<'a> {
    geometry: &'a FrameGeometry,
    scsb: usize,
    groups: &'a GroupingResult,
    candidates: &'a CandidateList,
    map: MapModel,
    policy: ExtensionPolicy,
    bursts: Vec<Vec<Burst>>,
    registry: FreezeRegistry,
    ie_count: usize,
    trace: Vec<f64>,
    stats: PackingStats,
}

impl<'a> FrameBuilder<'a> {
    fn subband_columns(&self, j: usize) -> usize {
        self.bursts[j].iter().map(|b| b.columns).sum()
    }

    fn max_columns_excluding(&self, j: usize) -> usize {
        (0..self.geometry.subbands)
            .filter(|&k| k != j)
            .map(|k| self.subband_columns(k))
            .max()
            .unwrap_or(0)
    }

    fn map_slots(&self) -> usize {
        self.map.size_slots(self.ie_count)
    }

    fn map_columns_for(&self, ie_count: usize) -> usize {
        self.map.columns(ie_count, self.geometry.subchannels)
    }

    fn candidate_groups(&self, j: usize) -> Vec<usize> {
        let n = self.groups.per_subband.get(j).map_or(0, Vec::len);
        match (self.policy, self.bursts[j].first()) {
            (ExtensionPolicy::GrowOnly, Some(b)) => vec![b.group],
            _ => (0..n).collect(),
        }
    }

    /// util(frame ∪ G) on a scratch burst. The group gets
    /// vLimit − usedSpace(j) + size(G) slots, clipped to what the MAP leaves.
    fn tentative(&mut self, j: usize, g: usize, vlimit_slots: usize) -> Option<Tentative> {
        let groups = self.groups;
        let group = &groups.per_subband[j][g];
        let existing = self.bursts[j].iter().position(|b| b.group == g);
        let (cur_cols, cur_ie, cur_util) = existing.map_or((0, 0, 0.0), |i| {
            let b = &self.bursts[j][i];
            (b.columns, b.ie_count(), b.utility)
        });
        let others_in_subband = self.subband_columns(j) - cur_cols;
        let requested = (vlimit_slots / self.scsb).saturating_sub(others_in_subband);
        if requested == 0 {
            return None;
        }
        self.stats.util_evaluations += 1;

        let mut burst = plan_group_area(group, g, requested, self.scsb, self.candidates, &self.registry);
        let max_other = self.max_columns_excluding(j);
        loop {
            if burst.is_empty() {
                return None;
            }
            let map_cols = self.map_columns_for(self.ie_count - cur_ie + burst.ie_count());
            if map_cols + max_other > self.geometry.dl_columns {
                return None;
            }
            let limit = self
                .geometry
                .dl_columns
                .saturating_sub(map_cols + others_in_subband);
            if burst.columns <= limit {
                break;
            }
            if limit == 0 {
                return None;
            }
            burst = plan_group_area(group, g, limit, self.scsb, self.candidates, &self.registry);
        }
        Some(Tentative {
            subband: j,
            existing,
            current_utility: cur_util,
            burst,
        })
    }

    fn commit(&mut self, t: Tentative) {
        let j = t.subband;
        match t.existing {
            Some(i) => {
                let old = std::mem::replace(&mut self.bursts[j][i], t.burst);
                self.ie_count = self.ie_count - old.ie_count() + self.bursts[j][i].ie_count();
                self.registry.assign(Some(&old), &self.bursts[j][i]);
            }
            None => {
                self.ie_count += t.burst.ie_count();
                self.registry.assign(None, &t.burst);
                self.bursts[j].push(t.burst);
            }
        }
        self.stats.accepted += 1;
        self.trace.push(self.utility());
    }

    fn utility(&self) -> f64 {
        self.bursts.iter().flatten().map(|b| b.utility).sum()
    }

    fn finish(self) -> OfdmaFrame {
        let dl = self.geometry.dl_columns;
        let utility = self.utility();
        let mut bursts = Vec::new();
        for subband in self.bursts {
            let mut right = dl;
            for mut b in subband {
                right -= b.columns;
                b.first_column = right;
                bursts.push(b);
            }
        }
        OfdmaFrame {
            geometry: *self.geometry,
            map: MapRegion {
                columns: self.map.columns(self.ie_count, self.geometry.subchannels),
                slots: self.map.size_slots(self.ie_count),
                ie_count: self.ie_count,
            },
            bursts,
            utility,
            utility_trace: self.trace,
            stats: self.stats,
        }
    }
}

/// Builds the frame from per-subband groups and the candidate list.
pub fn frame_construction(
    groups: &GroupingResult,
    candidates: &CandidateList,
    geometry: &FrameGeometry,
    params: &PackingParams,
) -> OfdmaFrame {
    let sb = geometry.subbands;
    let scsb = geometry.subchannels_per_subband();
    let mut b = FrameBuilder {
        geometry,
        scsb,
        groups,
        candidates,
        map: params.map,
        policy: params.policy,
        bursts: vec![Vec::new(); sb],
        registry: FreezeRegistry::new(candidates.len()),
        ie_count: 0,
        trace: Vec::new(),
        stats: PackingStats::default(),
    };
    if groups.per_subband.len() != sb || groups.is_empty() || candidates.is_empty() {
        return OfdmaFrame::empty(*geometry, &params.map);
    }

    let mut step = initial_step_size(candidates, geometry, &params.map, params.step_rule);
    let map_star = map_star(groups, geometry, params);
    let init_cols = initial_vertical_limit(geometry, params.num_antennas, map_star);
    let mut vlimit = (init_cols * scsb).max(step);
    b.stats.map_star_slots = map_star;
    b.stats.initial_columns = init_cols;
    b.stats.initial_step_slots = step;

    // A limit that exactly reaches the frame edge still gets its round.
    while vlimit * sb + b.map_slots() <= geometry.frame_size_slots() {
        b.stats.rounds += 1;
        let mut open = vec![true; sb];
        loop {
            let mut best: Option<Tentative> = None;
            for j in (0..sb).filter(|&j| open[j]) {
                for g in b.candidate_groups(j) {
                    if let Some(t) = b.tentative(j, g, vlimit) {
                        if best.as_ref().map_or(true, |cur| t.gain() > cur.gain()) {
                            best = Some(t);
                        }
                    }
                }
            }
            match best {
                Some(t) if t.burst.utility > t.current_utility => {
                    open[t.subband] = false;
                    b.commit(t);
                    if open.iter().all(|o| !o) {
                        break;
                    }
                }
                _ => break,
            }
        }
        let max_cols = (0..sb).map(|j| b.subband_columns(j)).max().unwrap_or(0);
        let free_cols = geometry
            .dl_columns
            .saturating_sub(b.map_columns_for(b.ie_count) + max_cols);
        step = step.min(free_cols.max(1) * scsb);
        vlimit += step;
    }
    b.finish()
}
