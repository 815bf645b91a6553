//! Synthetic frequency-selective multi-antenna channel.
//!
//! Each MS gets an L-tap delay line with an exponential power-delay profile.
//! Every tap leaves the uniform linear array at its own angle, so the spatial
//! signature varies over frequency. LOS stations add a dominant zero-delay
//! ray scaled by the Ricean K-factor. Channels are static within a drop.

mod coherence;
mod dump;

pub use coherence::{autocorrelation, coherence_bandwidth_hz, coherence_lag};
pub use dump::{read_channel_dump, write_channel_dump, DUMP_MAGIC};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::experiment::ScenarioConfig;
use crate::frame::SubbandSpec;
use crate::{Error, MsIndex, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Propagation parameters of the tapped-delay-line model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Number of delay taps (L).
    pub num_taps: usize,
    /// RMS delay spread of the power-delay profile in microseconds.
    pub rms_delay_spread_us: f64,
    /// Ricean K-factor of LOS stations in dB.
    pub ricean_k_db: f64,
    pub pathloss_exponent_los: f64,
    pub pathloss_exponent_nlos: f64,
    /// Standard deviation of per-tap departure angles around the MS bearing.
    pub angular_spread_deg: f64,
    /// MS bearings are drawn uniformly in +/- this angle around broadside.
    pub sector_half_width_deg: f64,
    /// Minimum BS-MS distance in meters.
    pub min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            num_taps: 6,
            rms_delay_spread_us: 0.5,
            ricean_k_db: 7.0,
            pathloss_exponent_los: 2.6,
            pathloss_exponent_nlos: 3.5,
            angular_spread_deg: 8.0,
            sector_half_width_deg: 60.0,
            min_distance_m: 35.0,
        }
    }
}

/// Propagation condition of the stations in a drop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LosMode {
    Los,
    Nlos,
}

impl std::fmt::Display for LosMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LosMode::Los => f.write_str("los"),
            LosMode::Nlos => f.write_str("nlos"),
        }
    }
}

/// BS uniform linear array.
#[derive(Clone, Debug, PartialEq)]
pub struct AntennaArrayConfig {
    pub num_elements: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub carrier_frequency_hz: f64,
}

impl AntennaArrayConfig {
    pub fn new(num_elements: usize, element_spacing: f64, carrier_frequency_hz: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::config("antenna array needs at least one element"));
        }
        if !(element_spacing > 0.0) {
            return Err(Error::config("element spacing must be positive"));
        }
        Ok(Self {
            num_elements,
            element_spacing,
            carrier_frequency_hz,
        })
    }

    /// Steering vector toward `angle_rad` from broadside.
    pub fn steering(&self, angle_rad: f64) -> Vec<Complex64> {
        let phase_step = 2.0 * PI * self.element_spacing * angle_rad.sin();
        (0..self.num_elements)
            .map(|m| Complex64::from_polar(1.0, phase_step * m as f64))
            .collect()
    }
}

/// Everything `generate_channel` needs, independent of the frame setup.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSetup {
    pub array: AntennaArrayConfig,
    pub params: ChannelParams,
    pub num_ms: usize,
    pub num_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    pub cell_radius_m: f64,
    pub los: LosMode,
}

impl ChannelSetup {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(Self {
            array: AntennaArrayConfig::new(
                cfg.num_antennas,
                cfg.element_spacing_wavelengths,
                cfg.carrier_frequency_ghz * 1e9,
            )?,
            params: cfg.channel.clone(),
            num_ms: cfg.num_ms,
            num_subcarriers: cfg.num_subcarriers(),
            subcarrier_spacing_hz: cfg.subcarrier_spacing_khz * 1e3,
            cell_radius_m: cfg.cell_radius_m,
            los: cfg.los,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.num_subcarriers == 0 {
            return Err(Error::config("number of subcarriers must be positive"));
        }
        if self.num_ms == 0 {
            return Err(Error::config("number of MSs must be positive"));
        }
        if self.array.num_elements == 0 {
            return Err(Error::config("number of antennas must be positive"));
        }
        if self.params.num_taps == 0 {
            return Err(Error::config("channel needs at least one tap"));
        }
        if !(self.params.rms_delay_spread_us >= 0.0) {
            return Err(Error::config("RMS delay spread must be non-negative"));
        }
        if !(self.cell_radius_m > self.params.min_distance_m && self.params.min_distance_m > 0.0) {
            return Err(Error::config("cell radius must exceed the minimum distance"));
        }
        Ok(())
    }
}

/// Per-MS, per-subcarrier channel vectors across the BS antennas,
/// including large-scale pathloss.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    num_ms: usize,
    num_subcarriers: usize,
    num_antennas: usize,
    /// MS-major, then subcarrier, then antenna.
    coeffs: Vec<Complex64>,
    pub pathloss_db: Vec<f64>,
    pub los: Vec<bool>,
    pub distance_m: Vec<f64>,
    pub bearing_deg: Vec<f64>,
}

impl ChannelRealization {
    pub fn from_parts(
        num_ms: usize,
        num_subcarriers: usize,
        num_antennas: usize,
        coeffs: Vec<Complex64>,
        pathloss_db: Vec<f64>,
        los: Vec<bool>,
    ) -> Result<Self> {
        if coeffs.len() != num_ms * num_subcarriers * num_antennas {
            return Err(Error::Dimension(format!(
                "expected {}x{}x{} coefficients, got {}",
                num_ms,
                num_subcarriers,
                num_antennas,
                coeffs.len()
            )));
        }
        if pathloss_db.len() != num_ms || los.len() != num_ms {
            return Err(Error::Dimension("per-MS vectors must have K entries".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Dimension("channel contains non-finite coefficients".into()));
        }
        Ok(Self {
            num_ms,
            num_subcarriers,
            num_antennas,
            coeffs,
            pathloss_db,
            los,
            distance_m: vec![f64::NAN; num_ms],
            bearing_deg: vec![f64::NAN; num_ms],
        })
    }

    pub fn num_ms(&self) -> usize {
        self.num_ms
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    /// Channel vector H_{u,f} of length M.
    pub fn response(&self, ms: MsIndex, subcarrier: usize) -> &[Complex64] {
        let start = (ms * self.num_subcarriers + subcarrier) * self.num_antennas;
        &self.coeffs[start..start + self.num_antennas]
    }

    /// Frequency response of one antenna element across all subcarriers.
    pub fn antenna_response(&self, ms: MsIndex, antenna: usize) -> Vec<Complex64> {
        (0..self.num_subcarriers)
            .map(|f| self.response(ms, f)[antenna])
            .collect()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Tap delays (seconds) and powers (summing to one) of the exponential PDP.
/// The taps span three decay constants; delays are then scaled to the
/// requested RMS spread.
pub fn power_delay_profile(num_taps: usize, rms_delay_spread_s: f64) -> (Vec<f64>, Vec<f64>) {
    let decay = 3.0 / num_taps.saturating_sub(1).max(1) as f64;
    let raw: Vec<f64> = (0..num_taps).map(|l| (-(l as f64) * decay).exp()).collect();
    let total: f64 = raw.iter().sum();
    let powers: Vec<f64> = raw.iter().map(|p| p / total).collect();

    let mean: f64 = powers.iter().enumerate().map(|(l, p)| l as f64 * p).sum();
    let second: f64 = powers.iter().enumerate().map(|(l, p)| (l as f64).powi(2) * p).sum();
    let shape_rms = (second - mean * mean).max(0.0).sqrt();
    let scale = if shape_rms > 0.0 {
        rms_delay_spread_s / shape_rms
    } else {
        0.0
    };
    let delays = (0..num_taps).map(|l| l as f64 * scale).collect();
    (delays, powers)
}

/// Log-distance pathloss anchored at free-space loss at 1 m.
pub fn pathloss_db(distance_m: f64, exponent: f64, carrier_frequency_hz: f64) -> f64 {
    let wavelength = SPEED_OF_LIGHT / carrier_frequency_hz;
    let fspl_1m = 20.0 * (4.0 * PI / wavelength).log10();
    fspl_1m + 10.0 * exponent * distance_m.max(1.0).log10()
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws one drop for the scenario.
pub fn generate_channel(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelRealization> {
    generate_channel_with(&ChannelSetup::from_scenario(cfg)?, seed)
}

/// Draws one drop. Pure in `(setup, seed)`.
pub fn generate_channel_with(setup: &ChannelSetup, seed: u64) -> Result<ChannelRealization> {
    setup.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = &setup.params;
    let num_ms = setup.num_ms;
    let num_sc = setup.num_subcarriers;
    let num_ant = setup.array.num_elements;

    let (delays, powers) = power_delay_profile(params.num_taps, params.rms_delay_spread_us * 1e-6);
    let k_linear = 10f64.powf(params.ricean_k_db / 10.0);
    let angle_jitter = Normal::new(0.0, params.angular_spread_deg.max(0.0).to_radians())
        .map_err(|e| Error::config(format!("angular spread: {e}")))?;

    // Baseband subcarrier frequencies, centered on DC.
    let freqs: Vec<f64> = (0..num_sc)
        .map(|k| (k as f64 - num_sc as f64 / 2.0) * setup.subcarrier_spacing_hz)
        .collect();

    let mut coeffs = Vec::with_capacity(num_ms * num_sc * num_ant);
    let mut pathloss = Vec::with_capacity(num_ms);
    let mut los_flags = Vec::with_capacity(num_ms);
    let mut distances = Vec::with_capacity(num_ms);
    let mut bearings = Vec::with_capacity(num_ms);

    let r0 = params.min_distance_m;
    let r1 = setup.cell_radius_m;
    for _ in 0..num_ms {
        let u: f64 = rng.random();
        let distance = (u * (r1 * r1 - r0 * r0) + r0 * r0).sqrt();
        let bearing = rng.random_range(-1.0..=1.0) * params.sector_half_width_deg.to_radians();
        let los = setup.los == LosMode::Los;
        let exponent = if los {
            params.pathloss_exponent_los
        } else {
            params.pathloss_exponent_nlos
        };
        let pl = pathloss_db(distance, exponent, setup.array.carrier_frequency_hz);
        let amplitude = 10f64.powf(-pl / 20.0);

        let (diffuse_scale, los_scale) = if los {
            ((1.0 / (k_linear + 1.0)).sqrt(), (k_linear / (k_linear + 1.0)).sqrt())
        } else {
            (1.0, 0.0)
        };

        // taps[l][m]
        let mut taps: Vec<Vec<Complex64>> = Vec::with_capacity(params.num_taps);
        for (l, &p) in powers.iter().enumerate() {
            let gain = complex_gaussian(&mut rng) * (p.sqrt() * diffuse_scale);
            let aod = bearing + angle_jitter.sample(&mut rng);
            let mut tap: Vec<Complex64> =
                setup.array.steering(aod).into_iter().map(|a| a * gain).collect();
            if l == 0 && los {
                let phase = rng.random_range(0.0..2.0 * PI);
                let ray = Complex64::from_polar(los_scale, phase);
                for (t, a) in tap.iter_mut().zip(setup.array.steering(bearing)) {
                    *t += a * ray;
                }
            }
            taps.push(tap);
        }

        for &f in &freqs {
            let rotations: Vec<Complex64> = delays
                .iter()
                .map(|&tau| Complex64::from_polar(1.0, -2.0 * PI * f * tau))
                .collect();
            for m in 0..num_ant {
                let h: Complex64 = taps.iter().zip(&rotations).map(|(tap, r)| tap[m] * r).sum();
                coeffs.push(h * amplitude);
            }
        }

        pathloss.push(pl);
        los_flags.push(los);
        distances.push(distance);
        bearings.push(bearing.to_degrees());
    }

    let mut ch = ChannelRealization::from_parts(num_ms, num_sc, num_ant, coeffs, pathloss, los_flags)?;
    ch.distance_m = distances;
    ch.bearing_deg = bearings;
    Ok(ch)
}

/// CSI known at the BS: the exact channel on every D-th subcarrier.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiReport {
    pub decimation: usize,
    pub noise_power: f64,
    num_ms: usize,
    num_antennas: usize,
    num_subcarriers: usize,
    /// 0-based subcarrier index of each sample.
    sample_indices: Vec<usize>,
    /// MS-major, then sample, then antenna.
    samples: Vec<Complex64>,
}

impl CsiReport {
    pub fn num_ms(&self) -> usize {
        self.num_ms
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn sample_indices(&self) -> &[usize] {
        &self.sample_indices
    }

    pub fn samples_per_ms(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn sample(&self, ms: MsIndex, sample: usize) -> &[Complex64] {
        let start = (ms * self.sample_indices.len() + sample) * self.num_antennas;
        &self.samples[start..start + self.num_antennas]
    }
}

pub fn decimate_csi(ch: &ChannelRealization, decimation: usize, noise_power: f64) -> Result<CsiReport> {
    let s = ch.num_subcarriers();
    if decimation == 0 || decimation > s {
        return Err(Error::config(format!(
            "CSI decimation must be in 1..={s}, got {decimation}"
        )));
    }
    let sample_indices: Vec<usize> = (0..s).step_by(decimation).collect();
    let mut samples = Vec::with_capacity(ch.num_ms() * sample_indices.len() * ch.num_antennas());
    for ms in 0..ch.num_ms() {
        for &f in &sample_indices {
            samples.extend_from_slice(ch.response(ms, f));
        }
    }
    Ok(CsiReport {
        decimation,
        noise_power,
        num_ms: ch.num_ms(),
        num_antennas: ch.num_antennas(),
        num_subcarriers: s,
        sample_indices,
        samples,
    })
}

/// CSI samples falling inside one subband, for every MS.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandCsi {
    pub subband: usize,
    pub sample_indices: Vec<usize>,
    num_antennas: usize,
    /// MS-major, then sample, then antenna.
    samples: Vec<Complex64>,
}

impl SubbandCsi {
    pub fn num_samples(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn channel(&self, ms: MsIndex, sample: usize) -> &[Complex64] {
        let start = (ms * self.sample_indices.len() + sample) * self.num_antennas;
        &self.samples[start..start + self.num_antennas]
    }

    /// All channel vectors of one MS inside the subband.
    pub fn ms_channels(&self, ms: MsIndex) -> impl Iterator<Item = &[Complex64]> + '_ {
        (0..self.sample_indices.len()).map(move |b| self.channel(ms, b))
    }
}

pub fn subband_csi(csi: &CsiReport, subband: &SubbandSpec) -> Result<SubbandCsi> {
    let range = subband.subcarriers.clone();
    if range.end > csi.num_subcarriers() || range.start >= range.end {
        return Err(Error::Dimension(format!(
            "subband {} subcarriers {}..{} outside 0..{}",
            subband.index,
            range.start,
            range.end,
            csi.num_subcarriers()
        )));
    }
    let picked: Vec<usize> = csi
        .sample_indices()
        .iter()
        .enumerate()
        .filter(|(_, f)| range.contains(f))
        .map(|(b, _)| b)
        .collect();
    if picked.is_empty() {
        return Err(Error::InsufficientCsiResolution {
            subband: subband.index,
            start: range.start,
            end: range.end,
            decimation: csi.decimation,
        });
    }
    let mut samples = Vec::with_capacity(csi.num_ms() * picked.len() * csi.num_antennas());
    for ms in 0..csi.num_ms() {
        for &b in &picked {
            samples.extend_from_slice(csi.sample(ms, b));
        }
    }
    Ok(SubbandCsi {
        subband: subband.index,
        sample_indices: picked.iter().map(|&b| csi.sample_indices()[b]).collect(),
        num_antennas: csi.num_antennas(),
        samples,
    })
}
