//! One Monte Carlo drop: static placement and channel, many frames.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::channel::{decimate_csi, generate_channel};
use crate::frame::{frame_construction, partition_frame, OfdmaFrame};
use crate::grouping::{form_groups, GroupingContext, GroupingResult};
use crate::qos::{build_candidate_list, generate_traffic, init_flows, jain_fairness, update_pf_averages, PacketId};
use crate::{Error, MsIndex, Result};

/// Metrics of one (scenario, seed) drop.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub frames: usize,
    /// Transmitted MAC bytes per second of simulated time.
    pub goodput_bytes_per_s: f64,
    pub transmitted_bytes: u64,
    /// MAP slots over downlink slots, averaged over frames.
    pub map_overhead: f64,
    /// MAP columns over DL columns, averaged over frames.
    pub map_column_fraction: f64,
    pub mean_map_ies: f64,
    pub served_bytes: Vec<u64>,
    pub jain_fairness: f64,
    pub util_evaluations: u64,
    pub generated_bytes: u64,
    pub dropped_bytes: u64,
    /// Distinct active-MS sets the grouper ran on.
    pub grouping_runs: usize,
    /// Excluded from equality-sensitive output.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Derives the traffic stream seed so traffic and channel draws stay
/// independent.
pub fn traffic_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03
}

/// Runs `cfg.frames_per_drop` frames of the full pipeline for one seed.
pub fn run_drop(cfg: &ScenarioConfig, seed: u64) -> Result<RunMetrics> {
    run_drop_with(cfg, seed, |_, _| {})
}

/// [`run_drop`] calling `inspect(frame_index, &frame)` after every frame.
pub fn run_drop_with<F>(cfg: &ScenarioConfig, seed: u64, mut inspect: F) -> Result<RunMetrics>
where
    F: FnMut(usize, &OfdmaFrame),
{
    cfg.validate()?;
    let start = Instant::now();
    let geometry = cfg.geometry()?;
    let table = cfg.mcs_table()?;
    let params = cfg.packing_params(&table);
    let k = cfg.num_ms;
    let frames = cfg.frames_per_drop;
    let frame_slots = geometry.frame_size_slots() as f64;

    let mut m = RunMetrics {
        frames,
        served_bytes: vec![0; k],
        ..Default::default()
    };

    if k == 0 {
        let empty = OfdmaFrame::empty(geometry, &params.map);
        for f in 0..frames {
            inspect(f, &empty);
        }
        m.map_overhead = empty.map.slots as f64 / frame_slots;
        m.map_column_fraction = empty.map.columns as f64 / geometry.dl_columns as f64;
        m.jain_fairness = 1.0;
        m.wall_time_s = start.elapsed().as_secs_f64();
        return Ok(m);
    }

    let noise = cfg.noise_power_w();
    let channel = generate_channel(cfg, seed)?;
    let csi = decimate_csi(&channel, cfg.csi_decimation, noise)?;
    let subbands = partition_frame(&geometry, cfg.num_subcarriers())?;
    let ctx = GroupingContext {
        table: &table,
        noise_power: noise,
        total_power: cfg.tx_power_w(),
        max_group_size: cfg.num_antennas,
        max_groups_per_subband: cfg.scheduler.max_groups_per_subband.unwrap_or(k),
    };

    let mut flows = init_flows(k, &cfg.traffic, &cfg.pf);
    let tseed = traffic_seed(seed);
    let mut cache: HashMap<Vec<MsIndex>, Rc<GroupingResult>> = HashMap::new();
    let mut overhead_sum = 0.0;
    let mut column_sum = 0.0;
    let mut ie_sum = 0usize;

    for f in 0..frames {
        let stats = generate_traffic(&mut flows, f as u64, tseed, &cfg.traffic, None);
        m.generated_bytes += stats.generated_bytes;
        m.dropped_bytes += stats.dropped_bytes;

        let active: Vec<MsIndex> = flows.iter().filter(|fl| !fl.is_empty()).map(|fl| fl.ms).collect();
        let groups = match cache.get(&active) {
            Some(g) => Rc::clone(g),
            None => {
                let g = Rc::new(form_groups(&csi, &subbands, &active, &ctx)?);
                cache.insert(active, Rc::clone(&g));
                g
            }
        };
        let best = groups.best_bytes_per_slot(k);
        let candidates = build_candidate_list(&mut flows, &best, &cfg.pf);
        let frame = frame_construction(&groups, &candidates, &geometry, &params);

        let sent: HashSet<PacketId> = frame.bursts.iter().flat_map(|b| b.packet_ids()).collect();
        let listed: usize = frame.bursts.iter().map(|b| b.packet_ids().count()).sum();
        if listed != sent.len() {
            return Err(Error::Dimension(format!("frame {f}: a packet was scheduled twice")));
        }
        let mut served = vec![0u64; k];
        let mut removed = 0usize;
        for flow in &mut flows {
            for p in flow.remove_transmitted(&sent) {
                served[flow.ms] += p.size as u64;
                removed += 1;
            }
        }
        if removed != sent.len() {
            return Err(Error::Dimension(format!(
                "frame {f}: {} scheduled packets, {removed} found in queues",
                sent.len()
            )));
        }
        update_pf_averages(&mut flows, &served, &cfg.pf);

        for (total, s) in m.served_bytes.iter_mut().zip(&served) {
            *total += s;
        }
        m.transmitted_bytes += served.iter().sum::<u64>();
        m.util_evaluations += frame.stats.util_evaluations;
        overhead_sum += frame.map.slots as f64 / frame_slots;
        column_sum += frame.map.columns as f64 / geometry.dl_columns as f64;
        ie_sum += frame.map.ie_count;
        inspect(f, &frame);
    }

    let n = frames as f64;
    m.goodput_bytes_per_s = m.transmitted_bytes as f64 / (n * cfg.frame_duration_ms * 1e-3);
    m.map_overhead = overhead_sum / n;
    m.map_column_fraction = column_sum / n;
    m.mean_map_ies = ie_sum as f64 / n;
    let served: Vec<f64> = m.served_bytes.iter().map(|&b| b as f64).collect();
    m.jain_fairness = jain_fairness(&served);
    m.grouping_runs = cache.len();
    m.wall_time_s = start.elapsed().as_secs_f64();
    Ok(m)
}
