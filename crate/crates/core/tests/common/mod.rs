//! Shared generators and independent checkers for the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fossos::frame::{slots_for, ExtensionPolicy, FrameGeometry, MapModel, OfdmaFrame, PackingParams, StepRule};
use fossos::grouping::{GroupingResult, SdmaGroup};
use fossos::phy::McsTable;
use fossos::qos::{build_candidate_list, Candidate, CandidateList, Flow, Packet, PacketId, PacketState, PfConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box-Muller, kept local so the tests do not share the library's sampler.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let r = (-u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * t.cos(), r * t.sin())
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| complex_gaussian(rng)).collect()
}

/// Solves A·X = B by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            for k in 0..b[row].len() {
                let v = b[col][k];
                b[row][k] -= f * v;
            }
        }
    }
    let cols = b[0].len();
    let mut x = vec![vec![Complex64::new(0.0, 0.0); cols]; n];
    for row in (0..n).rev() {
        for k in 0..cols {
            let mut s = b[row][k];
            for j in row + 1..n {
                s -= a[row][j] * x[j][k];
            }
            x[row][k] = s / a[row][row];
        }
    }
    x
}

/// Shape of a random packing instance.
#[derive(Clone, Debug)]
pub struct InstanceShape {
    pub subchannels: &'static [usize],
    pub subbands: &'static [usize],
    pub dl_columns: (usize, usize),
    pub num_ms: (usize, usize),
    pub antennas: (usize, usize),
    pub groups_per_subband: (usize, usize),
    pub packets: (usize, usize),
    pub sizes: &'static [u32],
    pub policy: ExtensionPolicy,
    /// Utilities and order as the PF scheduler produces them instead of
    /// arbitrary ones.
    pub pf_utilities: bool,
}

impl InstanceShape {
    pub fn general() -> Self {
        Self {
            subchannels: &[6, 12, 30, 60],
            subbands: &[1, 2, 3, 6],
            dl_columns: (2, 17),
            num_ms: (1, 12),
            antennas: (1, 8),
            groups_per_subband: (1, 6),
            packets: (0, 120),
            sizes: &[40, 40, 576, 1500, 6, 100],
            policy: ExtensionPolicy::GrowOnly,
            pf_utilities: false,
        }
    }

    pub fn tiny() -> Self {
        Self {
            subchannels: &[2, 4],
            subbands: &[1, 2],
            dl_columns: (2, 6),
            num_ms: (1, 4),
            antennas: (1, 2),
            groups_per_subband: (1, 3),
            packets: (1, 8),
            sizes: &[6, 9, 12, 20, 40, 60],
            policy: ExtensionPolicy::GrowOnly,
            pf_utilities: true,
        }
    }
}

pub struct Instance {
    pub geometry: FrameGeometry,
    pub groups: GroupingResult,
    pub candidates: CandidateList,
    pub params: PackingParams,
    pub num_ms: usize,
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

pub fn random_groups(
    rng: &mut ChaCha8Rng,
    subbands: usize,
    num_ms: usize,
    antennas: usize,
    per_subband: (usize, usize),
    table: &McsTable,
) -> GroupingResult {
    let per_subband = (0..subbands)
        .map(|j| {
            let n = rng.random_range(per_subband.0..=per_subband.1.min(num_ms.max(1)).max(per_subband.0));
            let mut groups: Vec<SdmaGroup> = (0..n)
                .map(|_| {
                    let size = rng.random_range(1..=antennas.min(num_ms));
                    let mut ids: Vec<usize> = (0..num_ms).collect();
                    ids.shuffle(rng);
                    let members = ids[..size]
                        .iter()
                        .map(|&ms| {
                            let mcs = if rng.random_bool(0.1) {
                                None
                            } else {
                                Some(rng.random_range(0..table.len()))
                            };
                            (ms, mcs)
                        })
                        .collect();
                    SdmaGroup::with_mcs(j, members, table)
                })
                .collect();
            groups.sort_by(|a, b| b.metric.cmp(&a.metric));
            groups
        })
        .collect();
    GroupingResult { per_subband }
}

pub fn random_candidates(
    rng: &mut ChaCha8Rng,
    num_ms: usize,
    count: usize,
    sizes: &[u32],
    best: Vec<Option<u32>>,
) -> CandidateList {
    let packets = (0..count)
        .map(|i| Candidate {
            id: PacketId(i as u64),
            ms: rng.random_range(0..num_ms),
            size: pick(rng, sizes),
            utility: rng.random_range(0.01..10.0),
        })
        .collect();
    CandidateList::from_ordered(packets, best)
}

/// Random FIFO queues with random PF averages, tagged and ordered by the
/// scheduler's own candidate builder.
pub fn pf_candidates(
    rng: &mut ChaCha8Rng,
    num_ms: usize,
    count: usize,
    sizes: &[u32],
    best: Vec<Option<u32>>,
) -> CandidateList {
    let pf = PfConfig::default();
    let mut flows: Vec<Flow> = (0..num_ms)
        .map(|ms| Flow::new(ms, u64::MAX, 1.0, rng.random_range(1.0..1000.0)))
        .collect();
    for i in 0..count {
        let ms = rng.random_range(0..num_ms);
        flows[ms].enqueue(Packet {
            id: PacketId(i as u64),
            ms,
            size: pick(rng, sizes),
            utility: 0.0,
            state: PacketState::Queued,
        });
    }
    build_candidate_list(&mut flows, &best, &pf)
}

pub fn random_map(rng: &mut ChaCha8Rng, tiny: bool) -> MapModel {
    let (fixed, ie) = if tiny {
        (pick(rng, &[8, 16, 40, 88]), pick(rng, &[4, 8, 24, 60]))
    } else {
        (88, pick(rng, &[30, 60]))
    };
    MapModel {
        fixed_bits: fixed,
        ie_bits: ie,
        repetition: 1,
        bytes_per_slot: 6,
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng, shape: &InstanceShape) -> Instance {
    let table = McsTable::wimax_default();
    let sc = pick(rng, shape.subchannels);
    let choices: Vec<usize> = shape.subbands.iter().copied().filter(|&s| sc % s == 0).collect();
    let sb = pick(rng, &choices);
    let msb = choices.iter().copied().max().unwrap();
    let dl = rng.random_range(shape.dl_columns.0..=shape.dl_columns.1);
    let geometry = FrameGeometry::new(sc, dl, sb, msb).unwrap();
    let k = rng.random_range(shape.num_ms.0..=shape.num_ms.1);
    let m = rng.random_range(shape.antennas.0..=shape.antennas.1);
    let groups = random_groups(rng, sb, k, m, shape.groups_per_subband, &table);
    let best = groups.best_bytes_per_slot(k);
    let n = rng.random_range(shape.packets.0..=shape.packets.1);
    let candidates = if shape.pf_utilities {
        pf_candidates(rng, k, n, shape.sizes, best)
    } else {
        random_candidates(rng, k, n, shape.sizes, best)
    };
    let tiny = sc <= 4;
    let params = PackingParams {
        map: random_map(rng, tiny),
        prediction_packet_bytes: 40,
        num_antennas: m,
        policy: shape.policy,
        step_rule: if rng.random_bool(0.5) {
            StepRule::SmallestPacket
        } else {
            StepRule::HeadOfLine
        },
        map_star_override: if rng.random_bool(0.3) {
            Some(rng.random_range(0..20))
        } else {
            None
        },
    };
    Instance {
        geometry,
        groups,
        candidates,
        params,
        num_ms: k,
    }
}

/// Checks every structural rule of a constructed frame against the
/// instance it was built from.
pub fn check_frame(inst: &Instance, frame: &OfdmaFrame) -> Result<(), String> {
    let g = &inst.geometry;
    let scsb = g.subchannels_per_subband();
    let model = &inst.params.map;

    // MAP accounting and IE bijection.
    let ies: usize = frame.bursts.iter().map(|b| b.members.len()).sum();
    if frame.map.ie_count != ies {
        return Err(format!("MAP lists {} IEs, bursts hold {ies} allocations", frame.map.ie_count));
    }
    let bits = model.fixed_bits as u64 + ies as u64 * model.ie_bits as u64;
    let slots = bits.div_ceil(8 * model.bytes_per_slot as u64) as usize;
    if frame.map.slots != slots || frame.map.columns != slots.div_ceil(g.subchannels) {
        return Err(format!("MAP size {:?} disagrees with {slots} slots", frame.map));
    }

    // Slot disjointness on an explicit grid.
    let mut owner = vec![vec![usize::MAX; g.dl_columns]; g.subchannels];
    for s in 0..frame.map.slots {
        let (r, c) = (s % g.subchannels, s / g.subchannels);
        if c >= g.dl_columns {
            return Err("MAP exceeds the frame".into());
        }
        owner[r][c] = usize::MAX - 1;
    }
    for (i, b) in frame.bursts.iter().enumerate() {
        if b.subband >= g.subbands {
            return Err(format!("burst {i} in subband {}", b.subband));
        }
        if b.first_column < frame.map.columns || b.first_column + b.columns > g.dl_columns {
            return Err(format!("burst {i} columns {:?} outside the data area", b.column_range()));
        }
        for r in b.subband * scsb..(b.subband + 1) * scsb {
            for c in b.column_range() {
                if owner[r][c] != usize::MAX {
                    return Err(format!("slot ({r},{c}) claimed twice"));
                }
                owner[r][c] = i;
            }
        }
    }

    // Bursts, members and packets.
    let mut seen = HashSet::new();
    let mut keys = HashSet::new();
    let mut total_util = 0.0;
    for (i, b) in frame.bursts.iter().enumerate() {
        if !keys.insert((b.subband, b.group)) {
            return Err(format!("group {} of subband {} scheduled twice", b.group, b.subband));
        }
        let group = inst
            .groups
            .per_subband
            .get(b.subband)
            .and_then(|gs| gs.get(b.group))
            .ok_or_else(|| format!("burst {i} references a missing group"))?;
        if b.members.is_empty() {
            return Err(format!("burst {i} is empty"));
        }
        let mut ms_seen = HashSet::new();
        let mut burst_util = 0.0;
        let mut width = 0;
        for m in &b.members {
            if !ms_seen.insert(m.ms) {
                return Err(format!("MS {} twice in burst {i}", m.ms));
            }
            let pos = group
                .members
                .iter()
                .position(|&x| x == m.ms)
                .ok_or_else(|| format!("MS {} not in group", m.ms))?;
            let bps = group.bytes_per_slot[pos];
            if bps == 0 || bps != m.bytes_per_slot {
                return Err(format!("MS {} sent at {} B/slot, group says {bps}", m.ms, m.bytes_per_slot));
            }
            if m.packets.is_empty() {
                return Err(format!("IE for MS {} without packets", m.ms));
            }
            let mut used = 0;
            let mut util = 0.0;
            for id in &m.packets {
                if !seen.insert(*id) {
                    return Err(format!("packet {id:?} scheduled twice"));
                }
                let c = inst
                    .candidates
                    .packets()
                    .iter()
                    .find(|c| c.id == *id)
                    .ok_or_else(|| format!("unknown packet {id:?}"))?;
                if c.ms != m.ms {
                    return Err(format!("packet {id:?} of MS {} sent to MS {}", c.ms, m.ms));
                }
                used += slots_for(c.size, bps);
                util += c.utility;
            }
            if used != m.slots_used || used > b.columns * scsb {
                return Err(format!("MS {} uses {used} slots, burst has {}", m.ms, b.columns * scsb));
            }
            width = width.max(used.div_ceil(scsb));
            burst_util += util;
        }
        if width != b.columns {
            return Err(format!("burst {i} is {} columns wide, packing needs {width}", b.columns));
        }
        if (burst_util - b.utility).abs() > 1e-9 * burst_util.max(1.0) {
            return Err(format!("burst {i} utility {} != {burst_util}", b.utility));
        }
        total_util += burst_util;
    }
    if (total_util - frame.utility).abs() > 1e-9 * total_util.max(1.0) {
        return Err(format!("frame utility {} != {total_util}", frame.utility));
    }

    // Column budget: MAP plus the widest subband.
    let mut per = vec![0usize; g.subbands];
    for b in &frame.bursts {
        per[b.subband] += b.columns;
    }
    let widest = per.iter().copied().max().unwrap_or(0);
    if frame.map.columns + widest > g.dl_columns {
        return Err(format!("MAP {} + data {widest} columns exceed {}", frame.map.columns, g.dl_columns));
    }

    // Utility never decreases along the construction.
    if frame.utility_trace.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("utility trace not increasing: {:?}", frame.utility_trace));
    }
    if let Some(last) = frame.utility_trace.last() {
        if (last - frame.utility).abs() > 1e-9 * last.max(1.0) {
            return Err("final trace value differs from frame utility".into());
        }
    }
    Ok(())
}

/// Best utility of any frame with at most one burst per subband, any packet
/// assignment, and the MAP/column budget respected.
pub fn exhaustive_optimum(inst: &Instance) -> f64 {
    let g = &inst.geometry;
    let sb = g.subbands;
    let scsb = g.subchannels_per_subband();
    let packets = inst.candidates.packets();
    let mut best = 0.0;

    let choices: Vec<Vec<Option<usize>>> = inst
        .groups
        .per_subband
        .iter()
        .map(|gs| std::iter::once(None).chain((0..gs.len()).map(Some)).collect())
        .collect();
    let mut pick = vec![0usize; sb];
    loop {
        // Layers: (subband, ms, bps).
        let mut layers = Vec::new();
        for j in 0..sb {
            if let Some(gi) = choices[j][pick[j]] {
                let grp = &inst.groups.per_subband[j][gi];
                for (&ms, &bps) in grp.members.iter().zip(&grp.bytes_per_slot) {
                    if bps > 0 {
                        layers.push((j, ms, bps));
                    }
                }
            }
        }
        let mut used = vec![0usize; layers.len()];
        let suffix: Vec<f64> = {
            let mut s = vec![0.0; packets.len() + 1];
            for i in (0..packets.len()).rev() {
                s[i] = s[i + 1] + packets[i].utility;
            }
            s
        };
        search(
            0, 0.0, &mut used, &layers, packets, &suffix, g.dl_columns, g.subchannels, scsb, sb, &inst.params.map,
            &mut best,
        );

        let mut j = 0;
        loop {
            if j == sb {
                return best;
            }
            pick[j] += 1;
            if pick[j] < choices[j].len() {
                break;
            }
            pick[j] = 0;
            j += 1;
        }
    }
}

fn feasible(used: &[usize], layers: &[(usize, usize, u32)], dl: usize, sc: usize, scsb: usize, sb: usize, map: &MapModel) -> bool {
    let ies = used.iter().filter(|&&u| u > 0).count();
    let mut width = vec![0usize; sb];
    for (l, &(j, _, _)) in layers.iter().enumerate() {
        width[j] = width[j].max(used[l].div_ceil(scsb));
    }
    let widest = width.into_iter().max().unwrap_or(0);
    map.columns(ies, sc) + widest <= dl
}

#[allow(clippy::too_many_arguments)]
fn search(
    i: usize,
    util: f64,
    used: &mut Vec<usize>,
    layers: &[(usize, usize, u32)],
    packets: &[Candidate],
    suffix: &[f64],
    dl: usize,
    sc: usize,
    scsb: usize,
    sb: usize,
    map: &MapModel,
    best: &mut f64,
) {
    if util > *best {
        *best = util;
    }
    if i == packets.len() || util + suffix[i] <= *best {
        return;
    }
    let p = &packets[i];
    for l in 0..layers.len() {
        let (_, ms, bps) = layers[l];
        if ms != p.ms {
            continue;
        }
        let add = slots_for(p.size, bps);
        used[l] += add;
        if feasible(used, layers, dl, sc, scsb, sb, map) {
            search(i + 1, util + p.utility, used, layers, packets, suffix, dl, sc, scsb, sb, map, best);
        }
        used[l] -= add;
    }
    search(i + 1, util, used, layers, packets, suffix, dl, sc, scsb, sb, map, best);
}
