//! Scenario configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, LosMode};
use crate::frame::{ExtensionPolicy, StepRule, FrameGeometry, MapConfig, MapModel, PackingParams};
use crate::phy::McsTable;
use crate::qos::{PfConfig, TrafficConfig};
use crate::{Error, Result};

/// Frame-constructor knobs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub policy: ExtensionPolicy,
    pub step_rule: StepRule,
    /// Groups kept per subband; `None` keeps every group the grouper forms.
    pub max_groups_per_subband: Option<usize>,
    /// Fixes the predicted MAP size in the initial vertical limit.
    pub map_star_override: Option<usize>,
}

/// One simulated scenario. Field names are the TOML keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// System bandwidth: 5, 10 or 20 MHz.
    pub bandwidth_mhz: f64,
    /// FFT size; defaults to 512/1024/2048 for 5/10/20 MHz. Every FFT bin
    /// is modelled as a subcarrier.
    pub fft_size: Option<usize>,
    pub subcarrier_spacing_khz: f64,
    pub carrier_frequency_ghz: f64,
    pub element_spacing_wavelengths: f64,
    /// BS antennas M.
    pub num_antennas: usize,
    /// MSs K.
    pub num_ms: usize,
    /// Subbands SB used by `run`.
    pub subbands: usize,
    /// Largest subband count MSB of the evaluation.
    pub max_subbands: usize,
    pub los: LosMode,
    pub frames_per_drop: usize,
    pub frame_duration_ms: f64,
    /// Subchannel rows SC; defaults to 12/30/60 for 5/10/20 MHz.
    pub subchannels: Option<usize>,
    /// Downlink columns DL_sl.
    pub dl_columns: usize,
    /// CSI is reported on every D-th subcarrier.
    pub csi_decimation: usize,
    pub tx_power_dbm: f64,
    /// Thermal noise density plus receiver noise figure.
    pub noise_density_dbm_hz: f64,
    /// Inter-cell interference folded into the noise floor.
    pub interference_margin_db: f64,
    pub cell_radius_m: f64,
    /// Number of placement seeds for `sweep`.
    pub seeds: usize,
    pub first_seed: u64,
    pub channel: ChannelParams,
    pub traffic: TrafficConfig,
    pub pf: PfConfig,
    pub map: MapConfig,
    pub scheduler: SchedulerConfig,
    /// TOML MCS table; the built-in table when absent.
    pub mcs_table_path: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bandwidth_mhz: 10.0,
            fft_size: None,
            subcarrier_spacing_khz: 10.9375,
            carrier_frequency_ghz: 2.5,
            element_spacing_wavelengths: 0.5,
            num_antennas: 4,
            num_ms: 12,
            subbands: 1,
            max_subbands: 6,
            los: LosMode::Los,
            frames_per_drop: 50,
            frame_duration_ms: 5.0,
            subchannels: None,
            dl_columns: 17,
            csi_decimation: 8,
            tx_power_dbm: 46.0,
            noise_density_dbm_hz: -167.0,
            interference_margin_db: 0.0,
            cell_radius_m: 288.0,
            seeds: 1,
            first_seed: 1,
            channel: ChannelParams::default(),
            traffic: TrafficConfig::default(),
            pf: PfConfig::default(),
            map: MapConfig::default(),
            scheduler: SchedulerConfig::default(),
            mcs_table_path: None,
        }
    }
}

fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn default_fft_size(&self) -> Option<usize> {
        match self.bandwidth_mhz {
            b if b == 5.0 => Some(512),
            b if b == 10.0 => Some(1024),
            b if b == 20.0 => Some(2048),
            _ => None,
        }
    }

    fn default_subchannels(&self) -> Option<usize> {
        match self.bandwidth_mhz {
            b if b == 5.0 => Some(12),
            b if b == 10.0 => Some(30),
            b if b == 20.0 => Some(60),
            _ => None,
        }
    }

    /// Subcarriers S, equal to the FFT size.
    pub fn num_subcarriers(&self) -> usize {
        self.fft_size.or_else(|| self.default_fft_size()).unwrap_or(0)
    }

    pub fn num_subchannels(&self) -> usize {
        self.subchannels.or_else(|| self.default_subchannels()).unwrap_or(0)
    }

    pub fn geometry(&self) -> Result<FrameGeometry> {
        FrameGeometry::new(self.num_subchannels(), self.dl_columns, self.subbands, self.max_subbands)
    }

    /// Noise power over the modelled band in watts.
    pub fn noise_power_w(&self) -> f64 {
        let band_hz = self.num_subcarriers() as f64 * self.subcarrier_spacing_khz * 1e3;
        dbm_to_w(self.noise_density_dbm_hz + self.interference_margin_db) * band_hz
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_w(self.tx_power_dbm)
    }

    pub fn mcs_table(&self) -> Result<McsTable> {
        match &self.mcs_table_path {
            Some(p) => McsTable::load(p),
            None => Ok(McsTable::wimax_default()),
        }
    }

    /// Packing parameters; the MAP is sent with the most robust MCS.
    pub fn packing_params(&self, table: &McsTable) -> PackingParams {
        PackingParams {
            map: MapModel::new(&self.map, table.most_robust().bytes_per_slot),
            prediction_packet_bytes: self.map.prediction_packet_bytes,
            num_antennas: self.num_antennas,
            policy: self.scheduler.policy,
            step_rule: self.scheduler.step_rule,
            map_star_override: self.scheduler.map_star_override,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fft = self.num_subcarriers();
        if fft == 0 {
            return Err(Error::config(format!(
                "no FFT size for {} MHz; set fft_size",
                self.bandwidth_mhz
            )));
        }
        if self.num_subchannels() == 0 {
            return Err(Error::config(format!(
                "no subchannel count for {} MHz; set subchannels",
                self.bandwidth_mhz
            )));
        }
        if !(self.bandwidth_mhz > 0.0) || !(self.subcarrier_spacing_khz > 0.0) {
            return Err(Error::config("bandwidth and subcarrier spacing must be positive"));
        }
        // The sampled band must cover the nominal bandwidth.
        let sampled_mhz = fft as f64 * self.subcarrier_spacing_khz / 1e3;
        if sampled_mhz + 1e-9 < self.bandwidth_mhz {
            return Err(Error::config(format!(
                "FFT size {fft} at {} kHz spans {sampled_mhz} MHz, less than {} MHz",
                self.subcarrier_spacing_khz, self.bandwidth_mhz
            )));
        }
        if self.num_antennas == 0 {
            return Err(Error::config("num_antennas must be positive"));
        }
        if self.frames_per_drop == 0 || !(self.frame_duration_ms > 0.0) {
            return Err(Error::config("frames_per_drop and frame_duration_ms must be positive"));
        }
        if self.csi_decimation == 0 || self.csi_decimation > fft {
            return Err(Error::config("csi_decimation must be in 1..=S"));
        }
        if self.scheduler.max_groups_per_subband == Some(0) {
            return Err(Error::config("max_groups_per_subband must be at least 1"));
        }
        if !(self.pf.horizon_frames >= 1.0) || !(self.pf.epsilon > 0.0) {
            return Err(Error::config("PF horizon must be >= 1 and epsilon positive"));
        }
        if !(0.0..=1.0).contains(&self.traffic.heavy_fraction) || !(0.0..=1.0).contains(&self.traffic.heavy_share) {
            return Err(Error::config("heavy_fraction and heavy_share must lie in [0, 1]"));
        }
        if self.num_subchannels() < self.max_subbands {
            return Err(Error::config("max_subbands exceeds the subchannel count"));
        }
        self.geometry()?;
        if fft < self.num_subchannels() {
            return Err(Error::config("fewer subcarriers than subchannels"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.num_subcarriers(), 1024);
        assert_eq!(cfg.num_subchannels(), 30);
    }

    #[test]
    fn bandwidth_defaults() {
        for (bw, s, sc) in [(5.0, 512, 12), (20.0, 2048, 60)] {
            let cfg = ScenarioConfig {
                bandwidth_mhz: bw,
                ..Default::default()
            };
            cfg.validate().unwrap();
            assert_eq!(cfg.num_subcarriers(), s);
            assert_eq!(cfg.num_subchannels(), sc);
        }
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let cfg = ScenarioConfig::from_toml_str("num_antennas = 2\nsubbands = 3\n[traffic]\nmode = \"finite_rate\"\n").unwrap();
        assert_eq!(cfg.num_antennas, 2);
        assert_eq!(cfg.subbands, 3);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
        assert!(ScenarioConfig::from_toml_str("bogus = 1\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            ScenarioConfig { bandwidth_mhz: 7.0, ..Default::default() },
            ScenarioConfig { num_antennas: 0, ..Default::default() },
            ScenarioConfig { subbands: 4, ..Default::default() },
            ScenarioConfig { csi_decimation: 0, ..Default::default() },
            ScenarioConfig { fft_size: Some(256), ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn noise_scales_with_band() {
        let a = ScenarioConfig::default();
        let b = ScenarioConfig { bandwidth_mhz: 20.0, ..Default::default() };
        approx::assert_relative_eq!(b.noise_power_w() / a.noise_power_w(), 2.0, max_relative = 1e-12);
    }
}
