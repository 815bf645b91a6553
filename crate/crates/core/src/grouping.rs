//! Per-subband SDMA group formation.
//!
//! Groups are scored by raw capacity: the sum of slot payloads of the MCS
//! each member reaches after MinMSE precoding and EESM compression over the
//! subband's CSI samples. Fairness is applied later through packet
//! utilities.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::channel::{subband_csi, CsiReport, SubbandCsi};
use crate::frame::SubbandSpec;
use crate::phy::{evaluate_group_link, LinkResult, McsTable, PrecodingWeights};
use crate::{Error, MsIndex, Result};

/// A set of MSs served together on one subband.
#[derive(Clone, Debug, PartialEq)]
pub struct SdmaGroup {
    pub subband: usize,
    pub members: Vec<MsIndex>,
    /// Weights per CSI sample of the subband.
    pub weights: Vec<PrecodingWeights>,
    pub links: Vec<LinkResult>,
    /// Slot payload per member, 0 when the member has no feasible MCS.
    pub bytes_per_slot: Vec<u32>,
    pub metric: u32,
}

impl SdmaGroup {
    /// A group with fixed per-member MCS and no channel state, for driving
    /// the frame constructor directly.
    pub fn with_mcs(subband: usize, members: Vec<(MsIndex, Option<usize>)>, table: &McsTable) -> Self {
        let links: Vec<LinkResult> = members
            .iter()
            .map(|&(_, mcs)| LinkResult {
                sinr_samples: Vec::new(),
                effective_sinr: mcs.map_or(0.0, |i| table.get(i).threshold_linear()),
                mcs,
            })
            .collect();
        let bytes_per_slot: Vec<u32> = links
            .iter()
            .map(|l| l.mcs.map_or(0, |i| table.get(i).bytes_per_slot))
            .collect();
        let mut g = Self {
            subband,
            members: members.into_iter().map(|(ms, _)| ms).collect(),
            weights: Vec::new(),
            links,
            bytes_per_slot,
            metric: 0,
        };
        g.metric = group_metric(&g);
        g
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn all_feasible(&self) -> bool {
        self.links.iter().all(|l| l.mcs.is_some())
    }
}

/// Sum of slot payloads over members; infeasible members add nothing.
pub fn group_metric(group: &SdmaGroup) -> u32 {
    group.bytes_per_slot.iter().sum()
}

/// Groups per subband, best metric first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupingResult {
    pub per_subband: Vec<Vec<SdmaGroup>>,
}

impl GroupingResult {
    pub fn num_subbands(&self) -> usize {
        self.per_subband.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_subband.iter().all(Vec::is_empty)
    }

    pub fn groups(&self) -> impl Iterator<Item = &SdmaGroup> {
        self.per_subband.iter().flatten()
    }

    /// Best slot payload each MS reaches in any group of any subband.
    pub fn best_bytes_per_slot(&self, num_ms: usize) -> Vec<Option<u32>> {
        let mut best = vec![None; num_ms];
        for g in self.groups() {
            for (&ms, &bps) in g.members.iter().zip(&g.bytes_per_slot) {
                if bps > 0 && ms < num_ms {
                    best[ms] = Some(best[ms].map_or(bps, |b: u32| b.max(bps)));
                }
            }
        }
        best
    }

    /// Mean slot payload over all feasible member allocations.
    pub fn mean_bytes_per_slot(&self) -> Option<f64> {
        let (sum, n) = self
            .groups()
            .flat_map(|g| g.bytes_per_slot.iter())
            .filter(|&&b| b > 0)
            .fold((0u64, 0usize), |(s, n), &b| (s + b as u64, n + 1));
        (n > 0).then(|| sum as f64 / n as f64)
    }

    /// Plain-text listing of the groups, one line per group.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for (j, groups) in self.per_subband.iter().enumerate() {
            let _ = writeln!(out, "subband {j}: {} groups", groups.len());
            for (i, g) in groups.iter().enumerate() {
                let members: Vec<String> = g
                    .members
                    .iter()
                    .zip(&g.links)
                    .map(|(ms, l)| match l.mcs {
                        Some(m) => format!("{ms}@{m}"),
                        None => format!("{ms}@-"),
                    })
                    .collect();
                let _ = writeln!(out, "  group {i}: metric={} members=[{}]", g.metric, members.join(" "));
            }
        }
        out
    }
}

/// Link parameters shared by every group evaluation.
#[derive(Clone, Copy, Debug)]
pub struct GroupingContext<'a> {
    pub table: &'a McsTable,
    pub noise_power: f64,
    pub total_power: f64,
    /// Largest group size, the antenna count M.
    pub max_group_size: usize,
    pub max_groups_per_subband: usize,
}

/// Evaluates MinMSE precoding, SINR and link adaptation of `members` on a
/// subband.
pub fn evaluate_group(csi: &SubbandCsi, members: &[MsIndex], ctx: &GroupingContext<'_>) -> Result<SdmaGroup> {
    if members.is_empty() {
        return Err(Error::Empty("group members"));
    }
    let link = evaluate_group_link(
        members.len(),
        csi.num_samples(),
        |u, b| csi.channel(members[u], b),
        ctx.noise_power,
        ctx.total_power,
        ctx.table,
    )?;
    let bytes_per_slot = link
        .links
        .iter()
        .map(|l| l.mcs.map_or(0, |i| ctx.table.get(i).bytes_per_slot))
        .collect();
    let mut g = SdmaGroup {
        subband: csi.subband,
        members: members.to_vec(),
        weights: link.weights,
        links: link.links,
        bytes_per_slot,
        metric: 0,
    };
    g.metric = group_metric(&g);
    Ok(g)
}

/// Grouping strategy for a single subband.
pub trait Grouper: Sync {
    fn group_subband(&self, csi: &SubbandCsi, active: &[MsIndex], ctx: &GroupingContext<'_>) -> Result<Vec<SdmaGroup>>;
}

/// Greedy best-fit capacity grouper.
///
/// Each group is seeded with the best uncovered feasible singleton and grown
/// one MS at a time by the inclusion that maximizes the metric. An inclusion
/// is admissible only when every member keeps a feasible MCS, and is taken
/// only when the metric strictly increases. Ties go to the lowest MS index.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyCapacityGrouper;

impl Grouper for GreedyCapacityGrouper {
    fn group_subband(&self, csi: &SubbandCsi, active: &[MsIndex], ctx: &GroupingContext<'_>) -> Result<Vec<SdmaGroup>> {
        let mut active: Vec<MsIndex> = active.to_vec();
        active.sort_unstable();
        active.dedup();

        let mut singles: Vec<(MsIndex, SdmaGroup)> = Vec::new();
        for &ms in &active {
            let g = evaluate_group(csi, &[ms], ctx)?;
            if g.all_feasible() {
                singles.push((ms, g));
            }
        }
        let feasible: Vec<MsIndex> = singles.iter().map(|(ms, _)| *ms).collect();

        let mut covered = BTreeSet::new();
        let mut groups = Vec::new();
        while groups.len() < ctx.max_groups_per_subband {
            let seed = singles
                .iter()
                .filter(|(ms, _)| !covered.contains(ms))
                // max_by_key keeps the last maximum; iterate in reverse for lowest index
                .rev()
                .max_by_key(|(_, g)| g.metric);
            let Some((_, seed_group)) = seed else { break };
            let mut group = seed_group.clone();

            while group.len() < ctx.max_group_size {
                let mut best: Option<SdmaGroup> = None;
                for &ms in &feasible {
                    if group.members.contains(&ms) {
                        continue;
                    }
                    let mut members = group.members.clone();
                    members.push(ms);
                    let cand = match evaluate_group(csi, &members, ctx) {
                        Ok(g) => g,
                        Err(Error::DegenerateInversion) => continue,
                        Err(e) => return Err(e),
                    };
                    if !cand.all_feasible() {
                        continue;
                    }
                    if best.as_ref().map_or(true, |b| cand.metric > b.metric) {
                        best = Some(cand);
                    }
                }
                match best {
                    Some(b) if b.metric > group.metric => group = b,
                    _ => break,
                }
            }

            covered.extend(group.members.iter().copied());
            groups.push(group);
        }
        groups.sort_by(|a, b| b.metric.cmp(&a.metric));
        Ok(groups)
    }
}

/// Runs the greedy grouper on every subband.
pub fn form_groups(
    csi: &CsiReport,
    subbands: &[SubbandSpec],
    active_ms: &[MsIndex],
    ctx: &GroupingContext<'_>,
) -> Result<GroupingResult> {
    form_groups_with(&GreedyCapacityGrouper, csi, subbands, active_ms, ctx)
}

/// Runs `grouper` independently on every subband; results keep subband order.
pub fn form_groups_with(
    grouper: &dyn Grouper,
    csi: &CsiReport,
    subbands: &[SubbandSpec],
    active_ms: &[MsIndex],
    ctx: &GroupingContext<'_>,
) -> Result<GroupingResult> {
    if ctx.max_groups_per_subband == 0 {
        return Err(Error::config("max_groups_per_subband must be at least 1"));
    }
    if ctx.max_group_size == 0 {
        return Err(Error::config("group size limit must be at least 1"));
    }
    if active_ms.iter().any(|&ms| ms >= csi.num_ms()) {
        return Err(Error::Dimension("active MS index out of range".into()));
    }
    let per_subband = subbands
        .par_iter()
        .map(|sb| {
            let sub = subband_csi(csi, sb)?;
            let mut groups = grouper.group_subband(&sub, active_ms, ctx)?;
            for g in &mut groups {
                g.subband = sb.index;
            }
            Ok(groups)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupingResult { per_subband })
}
