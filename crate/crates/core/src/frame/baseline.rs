//! Frequency-diversity baseline: one subband spanning the whole band, one
//! group grown column by column while the utility keeps increasing.

use super::construct::{initial_step_size, map_star, MapRegion, OfdmaFrame, PackingParams, PackingStats};
use super::map::initial_vertical_limit;
use super::packing::{plan_group_area, Burst, FreezeRegistry};
use super::FrameGeometry;
use crate::grouping::GroupingResult;
use crate::qos::CandidateList;
use crate::{Error, Result};

/// Packs the single-subband frame. `groups` must hold exactly one subband.
pub fn fd_baseline(
    groups: &GroupingResult,
    candidates: &CandidateList,
    geometry: &FrameGeometry,
    params: &PackingParams,
) -> Result<OfdmaFrame> {
    if geometry.subbands != 1 || groups.per_subband.len() != 1 {
        return Err(Error::config("FD baseline needs exactly one subband"));
    }
    let sc = geometry.subchannels;
    let dl = geometry.dl_columns;
    let map = params.map;
    if groups.is_empty() || candidates.is_empty() {
        return Ok(OfdmaFrame::empty(*geometry, &map));
    }
    let no_frozen = FreezeRegistry::new(candidates.len());
    let mut stats = PackingStats::default();

    // Widest burst of group `g` within `cols` columns that leaves room for
    // the MAP it needs.
    let fit = |g: usize, cols: usize, stats: &mut PackingStats| -> Option<Burst> {
        stats.util_evaluations += 1;
        let group = &groups.per_subband[0][g];
        let burst = plan_group_area(group, g, cols, sc, candidates, &no_frozen);
        if burst.is_empty() {
            return None;
        }
        let map_cols = map.columns(burst.ie_count(), sc);
        if burst.columns + map_cols <= dl {
            return Some(burst);
        }
        let room = dl.saturating_sub(map_cols);
        if room == 0 {
            return None;
        }
        let clipped = plan_group_area(group, g, room, sc, candidates, &no_frozen);
        (!clipped.is_empty()).then_some(clipped)
    };

    let mut step_cols = initial_step_size(candidates, geometry, &map, params.step_rule) / sc;
    let map_star = map_star(groups, geometry, params);
    let init = initial_vertical_limit(geometry, params.num_antennas, map_star);
    let mut limit_cols = init.max(step_cols);
    stats.map_star_slots = map_star;
    stats.initial_columns = init;
    stats.initial_step_slots = step_cols * sc;

    let mut chosen: Option<Burst> = None;
    let mut trace = Vec::new();
    let ies = |b: &Option<Burst>| b.as_ref().map_or(0, Burst::ie_count);
    while limit_cols * sc + map.size_slots(ies(&chosen)) <= sc * dl {
        stats.rounds += 1;
        match &chosen {
            None => {
                let mut best: Option<Burst> = None;
                for g in 0..groups.per_subband[0].len() {
                    if let Some(b) = fit(g, limit_cols, &mut stats) {
                        if best.as_ref().map_or(true, |cur| b.utility > cur.utility) {
                            best = Some(b);
                        }
                    }
                }
                if let Some(b) = best.filter(|b| b.utility > 0.0) {
                    stats.accepted += 1;
                    trace.push(b.utility);
                    chosen = Some(b);
                }
            }
            Some(cur) => {
                if let Some(b) = fit(cur.group, limit_cols, &mut stats) {
                    if b.utility > cur.utility {
                        stats.accepted += 1;
                        trace.push(b.utility);
                        chosen = Some(b);
                    }
                }
            }
        }
        let used = chosen.as_ref().map_or(0, |b| b.columns);
        let free = dl.saturating_sub(map.columns(ies(&chosen), sc) + used);
        step_cols = step_cols.min(free.max(1));
        limit_cols += step_cols;
    }

    let ie_count = ies(&chosen);
    let utility = chosen.as_ref().map_or(0.0, |b| b.utility);
    let bursts = chosen
        .map(|mut b| {
            b.first_column = dl - b.columns;
            vec![b]
        })
        .unwrap_or_default();
    Ok(OfdmaFrame {
        geometry: *geometry,
        map: MapRegion {
            columns: map.columns(ie_count, sc),
            slots: map.size_slots(ie_count),
            ie_count,
        },
        bursts,
        utility,
        utility_trace: trace,
        stats,
    })
}
