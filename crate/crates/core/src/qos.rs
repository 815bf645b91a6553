//! Per-MS buffers, traffic generation and proportional-fair packet
//! utilities.

use std::collections::VecDeque;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::MsIndex;

/// Packet sizes in bytes and their probabilities.
pub const PACKET_SIZES: [u32; 3] = [40, 576, 1500];
pub const PACKET_SIZE_PROBS: [f64; 3] = [0.5, 0.2, 0.3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PacketId(pub u64);

impl PacketId {
    /// Ids are unique per drop: the frame index sits in the upper 32 bits.
    fn new(frame_index: u64, seq: u64) -> Self {
        PacketId((frame_index << 32) | (seq & 0xffff_ffff))
    }
}

impl std::fmt::Display for PacketId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PacketState {
    Queued,
    Frozen(usize),
    Transmitted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub ms: MsIndex,
    pub size: u32,
    pub utility: f64,
    pub state: PacketState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficMode {
    /// Buffers are topped up every frame.
    Saturated,
    /// A fixed total offered load split by the flow weights.
    FiniteRate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub mode: TrafficMode,
    /// Total offered bytes per frame over all MSs (finite-rate mode).
    pub offered_load_bytes_per_frame: f64,
    /// Fraction of MSs in the heavy class.
    pub heavy_fraction: f64,
    /// Share of the offered bytes generated by the heavy class.
    pub heavy_share: f64,
    /// Buffer capacity per MS in bytes (12.96 KiB).
    pub buffer_bytes_per_ms: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            mode: TrafficMode::Saturated,
            offered_load_bytes_per_frame: 20_000.0,
            heavy_fraction: 0.5,
            heavy_share: 0.8,
            buffer_bytes_per_ms: 13_271,
        }
    }
}

/// Proportional-fair averaging parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfConfig {
    /// Averaging horizon T in frames.
    pub horizon_frames: f64,
    /// Floor ε of the averaged throughput, bytes/frame.
    pub epsilon: f64,
}

impl Default for PfConfig {
    fn default() -> Self {
        Self {
            horizon_frames: 64.0,
            epsilon: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flow {
    pub ms: MsIndex,
    pub buffer: VecDeque<Packet>,
    pub capacity_bytes: u64,
    pub occupancy_bytes: u64,
    /// Exponentially averaged served bytes per frame.
    pub avg_throughput: f64,
    /// Share of the total offered load.
    pub load_weight: f64,
    /// Offered bytes not yet turned into packets.
    credit_bytes: f64,
}

impl Flow {
    pub fn new(ms: MsIndex, capacity_bytes: u64, load_weight: f64, initial_avg: f64) -> Self {
        Self {
            ms,
            buffer: VecDeque::new(),
            capacity_bytes,
            occupancy_bytes: 0,
            avg_throughput: initial_avg,
            load_weight,
            credit_bytes: 0.0,
        }
    }

    /// Tail drop: the packet is rejected when it does not fit.
    pub fn enqueue(&mut self, packet: Packet) -> bool {
        if self.occupancy_bytes + packet.size as u64 > self.capacity_bytes {
            return false;
        }
        self.occupancy_bytes += packet.size as u64;
        self.buffer.push_back(packet);
        true
    }

    /// Removes the given packets from the buffer and returns them marked as
    /// transmitted.
    pub fn remove_transmitted(&mut self, ids: &std::collections::HashSet<PacketId>) -> Vec<Packet> {
        let mut sent = Vec::new();
        let mut kept = VecDeque::with_capacity(self.buffer.len());
        for mut p in self.buffer.drain(..) {
            if ids.contains(&p.id) {
                self.occupancy_bytes -= p.size as u64;
                p.state = PacketState::Transmitted;
                sent.push(p);
            } else {
                kept.push_back(p);
            }
        }
        self.buffer = kept;
        sent
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }
}

/// Flows with the heavy/light load split: the first ⌊K·heavy_fraction⌉ MSs
/// share `heavy_share` of the load.
pub fn init_flows(num_ms: usize, traffic: &TrafficConfig, pf: &PfConfig) -> Vec<Flow> {
    let heavy = (num_ms as f64 * traffic.heavy_fraction).round() as usize;
    let weights: Vec<f64> = if heavy == 0 || heavy >= num_ms {
        vec![1.0 / num_ms.max(1) as f64; num_ms]
    } else {
        (0..num_ms)
            .map(|ms| {
                if ms < heavy {
                    traffic.heavy_share / heavy as f64
                } else {
                    (1.0 - traffic.heavy_share) / (num_ms - heavy) as f64
                }
            })
            .collect()
    };
    weights
        .into_iter()
        .enumerate()
        .map(|(ms, w)| Flow::new(ms, traffic.buffer_bytes_per_ms, w, pf.epsilon))
        .collect()
}

/// Byte accounting of one generation step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrafficStats {
    pub generated_bytes: u64,
    pub enqueued_bytes: u64,
    pub dropped_bytes: u64,
    pub generated_packets: u64,
}

impl std::ops::AddAssign for TrafficStats {
    fn add_assign(&mut self, o: Self) {
        self.generated_bytes += o.generated_bytes;
        self.enqueued_bytes += o.enqueued_bytes;
        self.dropped_bytes += o.dropped_bytes;
        self.generated_packets += o.generated_packets;
    }
}

fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index.wrapping_add(1));
    rng
}

/// Generates this frame's arrivals. Deterministic in
/// `(flows, frame_index, seed)`. Per-flow stats are added to `per_flow` when
/// given.
pub fn generate_traffic(
    flows: &mut [Flow],
    frame_index: u64,
    seed: u64,
    traffic: &TrafficConfig,
    mut per_flow: Option<&mut [TrafficStats]>,
) -> TrafficStats {
    let mut rng = frame_rng(seed, frame_index);
    let sizes = WeightedIndex::new(PACKET_SIZE_PROBS).expect("static size distribution");
    let smallest = PACKET_SIZES.iter().copied().min().unwrap_or(1) as u64;
    let mut seq = 0u64;
    let mut total = TrafficStats::default();

    for (fi, flow) in flows.iter_mut().enumerate() {
        let mut stats = TrafficStats::default();
        let emit = |flow: &mut Flow, size: u32, stats: &mut TrafficStats, seq: &mut u64| -> bool {
            let p = Packet {
                id: PacketId::new(frame_index, *seq),
                ms: flow.ms,
                size,
                utility: 0.0,
                state: PacketState::Queued,
            };
            *seq += 1;
            stats.generated_bytes += size as u64;
            stats.generated_packets += 1;
            if flow.enqueue(p) {
                stats.enqueued_bytes += size as u64;
                true
            } else {
                stats.dropped_bytes += size as u64;
                false
            }
        };
        match traffic.mode {
            // Arrivals that do not fit are dropped; drawing continues until
            // not even the smallest packet fits.
            TrafficMode::Saturated => {
                while flow.occupancy_bytes + smallest <= flow.capacity_bytes {
                    let size = PACKET_SIZES[sizes.sample(&mut rng)];
                    emit(flow, size, &mut stats, &mut seq);
                }
            }
            TrafficMode::FiniteRate => {
                flow.credit_bytes += traffic.offered_load_bytes_per_frame.max(0.0) * flow.load_weight;
                while flow.credit_bytes > 0.0 {
                    let size = PACKET_SIZES[sizes.sample(&mut rng)];
                    flow.credit_bytes -= size as f64;
                    emit(flow, size, &mut stats, &mut seq);
                }
            }
        }
        if let Some(pf) = per_flow.as_deref_mut() {
            pf[fi] += stats;
        }
        total += stats;
    }
    total
}

/// A packet offered to the frame constructor.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: PacketId,
    pub ms: MsIndex,
    pub size: u32,
    pub utility: f64,
}

/// Candidate packets ordered by utility per slot, FIFO within each flow.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateList {
    packets: Vec<Candidate>,
    per_ms: Vec<Vec<usize>>,
    best_bytes_per_slot: Vec<Option<u32>>,
}

impl CandidateList {
    /// Builds a list from packets already in the desired order.
    pub fn from_ordered(packets: Vec<Candidate>, best_bytes_per_slot: Vec<Option<u32>>) -> Self {
        let mut per_ms = vec![Vec::new(); best_bytes_per_slot.len()];
        for (i, p) in packets.iter().enumerate() {
            if p.ms >= per_ms.len() {
                per_ms.resize(p.ms + 1, Vec::new());
            }
            per_ms[p.ms].push(i);
        }
        let mut best = best_bytes_per_slot;
        best.resize(per_ms.len(), None);
        Self {
            packets,
            per_ms,
            best_bytes_per_slot: best,
        }
    }

    pub fn packets(&self) -> &[Candidate] {
        &self.packets
    }

    pub fn get(&self, idx: usize) -> &Candidate {
        &self.packets[idx]
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn num_ms(&self) -> usize {
        self.per_ms.len()
    }

    /// Indices into [`packets`](Self::packets) of one MS, in list order.
    pub fn indices_of(&self, ms: MsIndex) -> &[usize] {
        self.per_ms.get(ms).map_or(&[], Vec::as_slice)
    }

    pub fn best_bytes_per_slot(&self, ms: MsIndex) -> Option<u32> {
        self.best_bytes_per_slot.get(ms).copied().flatten()
    }
}

/// u_i = size / (avg + ε)
pub fn packet_utility(size: u32, avg_throughput: f64, pf: &PfConfig) -> f64 {
    size as f64 / (avg_throughput + pf.epsilon)
}

/// Utility per slot of a flow at payload `bytes_per_slot`. Every packet of a
/// flow shares it: u_i / (size / bytes_per_slot) = bytes_per_slot / (avg + ε).
pub fn utility_per_slot(bytes_per_slot: u32, avg_throughput: f64, pf: &PfConfig) -> f64 {
    bytes_per_slot as f64 / (avg_throughput + pf.epsilon)
}

/// Tags every queued packet of a schedulable MS with its PF utility and
/// orders the result by utility per slot (descending), then MS index, then
/// FIFO position.
pub fn build_candidate_list(flows: &mut [Flow], best_bytes_per_slot: &[Option<u32>], pf: &PfConfig) -> CandidateList {
    let mut order: Vec<(f64, MsIndex, usize)> = flows
        .iter()
        .enumerate()
        .filter_map(|(fi, f)| {
            let bps = best_bytes_per_slot.get(f.ms).copied().flatten()?;
            (!f.is_empty()).then(|| (utility_per_slot(bps, f.avg_throughput, pf), f.ms, fi))
        })
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut packets = Vec::new();
    for &(_, _, fi) in &order {
        let flow = &mut flows[fi];
        let avg = flow.avg_throughput;
        for p in flow.buffer.iter_mut() {
            p.utility = packet_utility(p.size, avg, pf);
            packets.push(Candidate {
                id: p.id,
                ms: p.ms,
                size: p.size,
                utility: p.utility,
            });
        }
    }
    let num_ms = flows.iter().map(|f| f.ms + 1).max().unwrap_or(0).max(best_bytes_per_slot.len());
    let mut best = best_bytes_per_slot.to_vec();
    best.resize(num_ms, None);
    CandidateList::from_ordered(packets, best)
}

/// avg ← (1 − 1/T)·avg + served/T, floored at ε.
pub fn update_pf_averages(flows: &mut [Flow], served_bytes: &[u64], pf: &PfConfig) {
    let a = 1.0 / pf.horizon_frames;
    for f in flows.iter_mut() {
        let served = served_bytes.get(f.ms).copied().unwrap_or(0) as f64;
        f.avg_throughput = ((1.0 - a) * f.avg_throughput + a * served).max(pf.epsilon);
    }
}

/// Jain's fairness index of a non-negative allocation; 1 for all-zero input.
pub fn jain_fairness(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|v| v * v).sum();
    if values.is_empty() || sq == 0.0 {
        1.0
    } else {
        sum * sum / (values.len() as f64 * sq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(load: f64) -> TrafficConfig {
        TrafficConfig {
            mode: TrafficMode::FiniteRate,
            offered_load_bytes_per_frame: load,
            ..TrafficConfig::default()
        }
    }

    #[test]
    fn zero_load_generates_nothing() {
        let cfg = finite(0.0);
        let mut flows = init_flows(4, &cfg, &PfConfig::default());
        let s = generate_traffic(&mut flows, 0, 1, &cfg, None);
        assert_eq!(s, TrafficStats::default());
        assert!(flows.iter().all(Flow::is_empty));
    }

    #[test]
    fn full_buffer_tail_drops() {
        let cfg = TrafficConfig {
            buffer_bytes_per_ms: 3000,
            ..finite(1e5)
        };
        let mut flows = init_flows(2, &cfg, &PfConfig::default());
        let first = generate_traffic(&mut flows, 0, 9, &cfg, None);
        let held: Vec<Vec<PacketId>> = flows.iter().map(|f| f.buffer.iter().map(|p| p.id).collect()).collect();
        let second = generate_traffic(&mut flows, 1, 9, &cfg, None);
        for (f, old) in flows.iter().zip(&held) {
            assert!(f.occupancy_bytes <= f.capacity_bytes);
            assert_eq!(f.occupancy_bytes, f.buffer.iter().map(|p| p.size as u64).sum::<u64>());
            // oldest packets are still at the head
            assert!(f.buffer.iter().map(|p| p.id).take(old.len()).eq(old.iter().copied()));
        }
        for s in [first, second] {
            assert_eq!(s.generated_bytes, s.enqueued_bytes + s.dropped_bytes);
        }
        assert!(second.dropped_bytes > 0);
    }

    #[test]
    fn saturated_mode_fills_buffers() {
        let cfg = TrafficConfig::default();
        let mut flows = init_flows(3, &cfg, &PfConfig::default());
        let s = generate_traffic(&mut flows, 0, 5, &cfg, None);
        assert_eq!(s.generated_bytes, s.enqueued_bytes + s.dropped_bytes);
        for f in &flows {
            assert!(f.occupancy_bytes + 40 > f.capacity_bytes);
            assert!(f.occupancy_bytes <= f.capacity_bytes);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = finite(8000.0);
        let run = || {
            let mut flows = init_flows(5, &cfg, &PfConfig::default());
            for k in 0..5 {
                generate_traffic(&mut flows, k, 77, &cfg, None);
            }
            flows
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn heavy_half_weights() {
        let w: Vec<f64> = init_flows(6, &TrafficConfig::default(), &PfConfig::default())
            .iter()
            .map(|f| f.load_weight)
            .collect();
        assert!((w[..3].iter().sum::<f64>() - 0.8).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let single = init_flows(1, &TrafficConfig::default(), &PfConfig::default());
        assert_eq!(single[0].load_weight, 1.0);
    }

    #[test]
    fn pf_decays_to_floor() {
        let pf = PfConfig::default();
        let mut flows = vec![Flow::new(0, 100, 1.0, 5000.0)];
        for _ in 0..5000 {
            update_pf_averages(&mut flows, &[0], &pf);
        }
        assert_eq!(flows[0].avg_throughput, pf.epsilon);
    }

    #[test]
    fn pf_converges_to_constant_service() {
        let pf = PfConfig::default();
        let mut flows = vec![Flow::new(0, 100, 1.0, pf.epsilon)];
        let c = 2500u64;
        for _ in 0..(5.0 * pf.horizon_frames) as usize {
            update_pf_averages(&mut flows, &[c], &pf);
        }
        assert!((flows[0].avg_throughput - c as f64).abs() / (c as f64) < 0.01);
    }

    #[test]
    fn jain_index_bounds() {
        assert_eq!(jain_fairness(&[3.0, 3.0, 3.0]), 1.0);
        assert!((jain_fairness(&[1.0, 0.0, 0.0, 0.0]) - 0.25).abs() < 1e-12);
    }
}
