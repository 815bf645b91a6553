//! Frequency autocorrelation and coherence bandwidth of a realization.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::ChannelRealization;
use crate::MsIndex;

/// Normalized frequency autocorrelation |R(k)| / R(0) for lags 0..S, summed
/// over antennas. R(k) averages H(f)·H*(f+k) over the S-k overlapping pairs.
/// Computed with a zero-padded FFT.
pub fn autocorrelation(ch: &ChannelRealization, ms: MsIndex) -> Vec<f64> {
    let s = ch.num_subcarriers();
    let n = (2 * s).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut acc = vec![Complex64::new(0.0, 0.0); s];
    for m in 0..ch.num_antennas() {
        let mut buf: Vec<Complex64> = ch.antenna_response(ms, m);
        buf.resize(n, Complex64::new(0.0, 0.0));
        fwd.process(&mut buf);
        for x in buf.iter_mut() {
            *x = Complex64::new(x.norm_sqr(), 0.0);
        }
        inv.process(&mut buf);
        // IFFT(|X|^2)[k] = n * sum_f H(f+k) H*(f)
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].conj() / n as f64;
        }
    }
    let r: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm() / (s - k) as f64)
        .collect();
    let r0 = r[0];
    if r0 > 0.0 {
        r.into_iter().map(|x| x / r0).collect()
    } else {
        r
    }
}

/// First lag at which the normalized autocorrelation drops below `threshold`,
/// or S when it never does.
pub fn coherence_lag(acf: &[f64], threshold: f64) -> usize {
    acf.iter().position(|&x| x < threshold).unwrap_or(acf.len())
}

/// 50%-correlation width of the frequency response, in Hz.
pub fn coherence_bandwidth_hz(ch: &ChannelRealization, ms: MsIndex, subcarrier_spacing_hz: f64) -> f64 {
    coherence_lag(&autocorrelation(ch, ms), 0.5) as f64 * subcarrier_spacing_hz
}
