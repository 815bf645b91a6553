//! Cartesian scenario sweeps and their CSV rows.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_drop, RunMetrics, ScenarioConfig};
use crate::channel::LosMode;
use crate::{Error, Result};

/// Axes of a sweep; every combination runs once per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub bandwidths_mhz: Vec<f64>,
    pub antennas: Vec<usize>,
    pub num_ms: Vec<usize>,
    pub subbands: Vec<usize>,
    pub los: Vec<LosMode>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    /// A sweep that only varies the seed around `cfg`.
    pub fn single(cfg: &ScenarioConfig) -> Self {
        Self {
            bandwidths_mhz: vec![cfg.bandwidth_mhz],
            antennas: vec![cfg.num_antennas],
            num_ms: vec![cfg.num_ms],
            subbands: vec![cfg.subbands],
            los: vec![cfg.los],
            seeds: (0..cfg.seeds as u64).map(|i| cfg.first_seed + i).collect(),
        }
    }

    pub fn num_runs(&self) -> usize {
        self.bandwidths_mhz.len()
            * self.antennas.len()
            * self.num_ms.len()
            * self.subbands.len()
            * self.los.len()
            * self.seeds.len()
    }

    /// Every (scenario, seed) pair in canonical order.
    pub fn cells(&self, base: &ScenarioConfig) -> Vec<(ScenarioConfig, u64)> {
        let mut out = Vec::with_capacity(self.num_runs());
        for &bw in &self.bandwidths_mhz {
            for &m in &self.antennas {
                for &k in &self.num_ms {
                    for &sb in &self.subbands {
                        for &los in &self.los {
                            let cfg = ScenarioConfig {
                                bandwidth_mhz: bw,
                                num_antennas: m,
                                num_ms: k,
                                subbands: sb,
                                los,
                                ..base.clone()
                            };
                            for &seed in &self.seeds {
                                out.push((cfg.clone(), seed));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One CSV line: scenario key, seed, status and metrics. Served bytes per
/// MS are joined with `;`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bandwidth_mhz: f64,
    pub num_antennas: usize,
    pub num_ms: usize,
    pub subbands: usize,
    pub los: LosMode,
    pub seed: u64,
    /// `ok` or the error message of a failed run.
    pub status: String,
    pub goodput_bytes_per_s: f64,
    pub transmitted_bytes: u64,
    pub map_overhead: f64,
    pub map_column_fraction: f64,
    pub mean_map_ies: f64,
    pub jain_fairness: f64,
    pub util_evaluations: u64,
    pub generated_bytes: u64,
    pub dropped_bytes: u64,
    pub served_bytes: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn new(cfg: &ScenarioConfig, seed: u64, result: &Result<RunMetrics>) -> Self {
        let empty = RunMetrics::default();
        let (status, m) = match result {
            Ok(m) => ("ok".to_string(), m),
            Err(e) => (format!("error: {e}"), &empty),
        };
        Self {
            bandwidth_mhz: cfg.bandwidth_mhz,
            num_antennas: cfg.num_antennas,
            num_ms: cfg.num_ms,
            subbands: cfg.subbands,
            los: cfg.los,
            seed,
            status,
            goodput_bytes_per_s: m.goodput_bytes_per_s,
            transmitted_bytes: m.transmitted_bytes,
            map_overhead: m.map_overhead,
            map_column_fraction: m.map_column_fraction,
            mean_map_ies: m.mean_map_ies,
            jain_fairness: m.jain_fairness,
            util_evaluations: m.util_evaluations,
            generated_bytes: m.generated_bytes,
            dropped_bytes: m.dropped_bytes,
            served_bytes: m
                .served_bytes
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        }
    }

    fn sort_key(&self) -> (u64, usize, usize, usize, u8, u64) {
        (
            self.bandwidth_mhz.to_bits(),
            self.num_antennas,
            self.num_ms,
            self.subbands,
            matches!(self.los, LosMode::Nlos) as u8,
            self.seed,
        )
    }
}

/// Outcome of a sweep.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Total wall time of the individual runs.
    pub run_time_s: f64,
}

/// Runs every cell and seed; `jobs` caps the worker threads (`None`: all
/// cores). Failed runs become rows with an error status.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepOutput> {
    let cells = spec.cells(base);
    let work = || {
        cells
            .par_iter()
            .map(|(cfg, seed)| {
                let result = run_drop(cfg, *seed);
                if let Err(e) = &result {
                    log::warn!(
                        "run failed (bw={} M={} K={} SB={} seed={seed}): {e}",
                        cfg.bandwidth_mhz,
                        cfg.num_antennas,
                        cfg.num_ms,
                        cfg.subbands
                    );
                }
                let t = result.as_ref().map_or(0.0, |m| m.wall_time_s);
                (SweepRow::new(cfg, *seed, &result), t)
            })
            .collect::<Vec<_>>()
    };
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let run_time_s = results.iter().map(|(_, t)| t).sum();
    let mut rows: Vec<SweepRow> = results.into_iter().map(|(r, _)| r).collect();
    sort_rows(&mut rows);
    Ok(SweepOutput { rows, run_time_s })
}

/// Canonical row order: bandwidth, M, K, SB, LOS before NLOS, seed.
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by_key(SweepRow::sort_key);
}

pub fn write_rows(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Config echo, seed list and code version of a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ScenarioConfig,
    pub sweep: SweepSpec,
    pub rows: usize,
    pub failed_rows: usize,
    pub run_time_s: f64,
}

impl Manifest {
    pub fn new(config: &ScenarioConfig, sweep: &SweepSpec, out: &SweepOutput) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            sweep: sweep.clone(),
            rows: out.rows.len(),
            failed_rows: out.rows.iter().filter(|r| !r.is_ok()).count(),
            run_time_s: out.run_time_s,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
