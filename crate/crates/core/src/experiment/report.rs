//! Per-cell aggregation of sweep rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::SweepRow;
use crate::channel::LosMode;
use crate::{Error, Result};

/// Sample mean and the half-width of its 95% confidence interval
/// (Student t); the interval is `None` for fewer than two samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95: Option<f64>,
}

impl MeanCi {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, ci95: None };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, ci95: None };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        Self {
            mean,
            ci95: Some(t * (var / n as f64).sqrt()),
        }
    }

    fn fmt_ci(&self, scale: f64, digits: usize) -> String {
        match self.ci95 {
            Some(c) => format!("{:.*}", digits, c * scale),
            None => "n/a".into(),
        }
    }
}

/// Scenario key of a summary cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellKey {
    pub bandwidth_mhz: f64,
    pub num_antennas: usize,
    pub num_ms: usize,
    pub subbands: usize,
    pub los: LosMode,
}

impl CellKey {
    fn of(r: &SweepRow) -> Self {
        Self {
            bandwidth_mhz: r.bandwidth_mhz,
            num_antennas: r.num_antennas,
            num_ms: r.num_ms,
            subbands: r.subbands,
            los: r.los,
        }
    }

    fn order(&self) -> (u64, usize, usize, usize, u8) {
        (
            self.bandwidth_mhz.to_bits(),
            self.num_antennas,
            self.num_ms,
            self.subbands,
            matches!(self.los, LosMode::Nlos) as u8,
        )
    }

    fn with_subbands(&self, subbands: usize) -> Self {
        Self { subbands, ..*self }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub runs: usize,
    pub failed: usize,
    pub goodput: MeanCi,
    pub map_overhead: MeanCi,
    pub map_column_fraction: MeanCi,
    pub jain_fairness: MeanCi,
    pub util_evaluations: MeanCi,
    /// goodput(SB) / goodput(SB = 1) − 1 on the cell means.
    pub fss_gain: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub cells: Vec<CellSummary>,
    pub warnings: Vec<String>,
}

/// Formats a gain as a percentage with one decimal, e.g. `16.8%`.
pub fn format_gain(gain: f64) -> String {
    format!("{:.1}%", gain * 100.0)
}

/// Groups the rows by scenario cell and summarizes the successful ones.
pub fn summarize(rows: &[SweepRow]) -> Report {
    let mut groups: BTreeMap<(u64, usize, usize, usize, u8), (CellKey, Vec<&SweepRow>, usize)> = BTreeMap::new();
    for r in rows {
        let key = CellKey::of(r);
        let e = groups.entry(key.order()).or_insert_with(|| (key, Vec::new(), 0));
        if r.is_ok() {
            e.1.push(r);
        } else {
            e.2 += 1;
        }
    }
    let mut cells: Vec<CellSummary> = groups
        .into_values()
        .map(|(key, ok, failed)| {
            let col = |f: fn(&SweepRow) -> f64| MeanCi::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            CellSummary {
                key,
                runs: ok.len(),
                failed,
                goodput: col(|r| r.goodput_bytes_per_s),
                map_overhead: col(|r| r.map_overhead),
                map_column_fraction: col(|r| r.map_column_fraction),
                jain_fairness: col(|r| r.jain_fairness),
                util_evaluations: col(|r| r.util_evaluations as f64),
                fss_gain: None,
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let baselines: BTreeMap<_, f64> = cells
        .iter()
        .filter(|c| c.key.subbands == 1 && c.runs > 0)
        .map(|c| (c.key.order(), c.goodput.mean))
        .collect();
    for c in &mut cells {
        match baselines.get(&c.key.with_subbands(1).order()) {
            Some(&base) if base > 0.0 => c.fss_gain = Some(c.goodput.mean / base - 1.0),
            Some(_) => warnings.push(format!(
                "zero SB=1 goodput for {}; FSS gain omitted",
                describe(&c.key)
            )),
            None => warnings.push(format!("no SB=1 baseline for {}; FSS gain omitted", describe(&c.key))),
        }
    }
    warnings.dedup();
    for w in &warnings {
        log::warn!("{w}");
    }
    Report { cells, warnings }
}

fn describe(k: &CellKey) -> String {
    format!(
        "bw={} MHz M={} K={} SB={} {}",
        k.bandwidth_mhz, k.num_antennas, k.num_ms, k.subbands, k.los
    )
}

/// Fixed-width text table: goodput in kB/s, overhead in percent.
pub fn render_report(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>3} {:>4} {:>3} {:>5} {:>5} {:>12} {:>10} {:>9} {:>8} {:>8} {:>9}",
        "bw", "M", "K", "SB", "los", "n", "goodput_kBps", "ci95", "map_%", "ci95", "jain", "fss_gain"
    );
    for c in &report.cells {
        let k = &c.key;
        let _ = writeln!(
            out,
            "{:>6} {:>3} {:>4} {:>3} {:>5} {:>5} {:>12.2} {:>10} {:>9.3} {:>8} {:>8.3} {:>9}",
            k.bandwidth_mhz,
            k.num_antennas,
            k.num_ms,
            k.subbands,
            k.los.to_string(),
            c.runs,
            c.goodput.mean / 1e3,
            c.goodput.fmt_ci(1e-3, 2),
            c.map_overhead.mean * 100.0,
            c.map_overhead.fmt_ci(100.0, 3),
            c.jain_fairness.mean,
            c.fss_gain.map_or_else(|| "-".to_string(), format_gain),
        );
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// Writes the summary as CSV for plotting.
pub fn write_summary_csv(path: &Path, report: &Report) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "bandwidth_mhz",
        "num_antennas",
        "num_ms",
        "subbands",
        "los",
        "runs",
        "failed",
        "goodput_mean",
        "goodput_ci95",
        "map_overhead_mean",
        "map_overhead_ci95",
        "map_column_fraction_mean",
        "jain_mean",
        "util_evaluations_mean",
        "fss_gain",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for c in &report.cells {
        let k = &c.key;
        w.write_record([
            k.bandwidth_mhz.to_string(),
            k.num_antennas.to_string(),
            k.num_ms.to_string(),
            k.subbands.to_string(),
            k.los.to_string(),
            c.runs.to_string(),
            c.failed.to_string(),
            c.goodput.mean.to_string(),
            opt(c.goodput.ci95),
            c.map_overhead.mean.to_string(),
            opt(c.map_overhead.ci95),
            c.map_column_fraction.mean.to_string(),
            c.jain_fairness.mean.to_string(),
            c.util_evaluations.mean.to_string(),
            opt(c.fss_gain),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
