//! Seeded reference-signal generators: sine waves and band-passed Gaussian
//! noise. Every generator is deterministic given its parameters, so tests
//! and the comparison harness run without external data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Sampled sine `amp * sin(2*pi*freq*t + phase)` at rate `fs` over
/// `duration` seconds.
pub fn sine(amp: f64, freq_hz: f64, fs: f64, duration: f64, phase: f64) -> Result<TimeSeries> {
    if !(fs > 0.0) || !(duration > 0.0) || !(freq_hz > 0.0) {
        return Err(Error::InvalidParameter(
            "fs, duration, and freq must be positive".into(),
        ));
    }
    let n = (fs * duration).round() as usize;
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let dt = 1.0 / fs;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let v: Vec<f64> = t
        .iter()
        .map(|&ti| amp * (2.0 * std::f64::consts::PI * freq_hz * ti + phase).sin())
        .collect();
    TimeSeries::new(t, v, "sine")
}

/// Gaussian noise restricted to the band `[f_lo, f_hi]` Hz, rescaled to
/// the target standard deviation.
///
/// White N(0,1) samples are transformed to the frequency domain, bins
/// outside the band are zeroed, and the result is transformed back. The
/// output is exactly band-limited and exactly reproducible for a fixed
/// seed; Hermitian symmetry of the mask keeps it real.
pub fn band_passed_gaussian(
    f_lo: f64,
    f_hi: f64,
    fs: f64,
    n: usize,
    target_std: f64,
    seed: u64,
) -> Result<TimeSeries> {
    if !(fs > 0.0) {
        return Err(Error::InvalidParameter("fs must be positive".into()));
    }
    if !(0.0 <= f_lo && f_lo < f_hi && f_hi <= fs / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "band [{f_lo}, {f_hi}] must satisfy 0 <= f_lo < f_hi <= fs/2"
        )));
    }
    if n < 16 {
        return Err(Error::TooFewSamples { need: 16, got: n });
    }
    if !(target_std > 0.0) {
        return Err(Error::InvalidParameter(
            "target_std must be positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let df = fs / n as f64;
    for (k, slot) in buf.iter_mut().enumerate() {
        // Frequency of bin k, folding the upper half onto negative freqs.
        let f = if k <= n / 2 {
            k as f64 * df
        } else {
            (n - k) as f64 * df
        };
        if f < f_lo || f > f_hi {
            *slot = Complex::new(0.0, 0.0);
        }
    }

    planner.plan_fft_inverse(n).process(&mut buf);
    let mut v: Vec<f64> = buf.iter().map(|c| c.re / n as f64).collect();

    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(Error::DegenerateSignal(
            "band-pass produced a constant signal".into(),
        ));
    }
    let scale = target_std / var.sqrt();
    for x in v.iter_mut() {
        *x = (*x - mean) * scale;
    }

    let dt = 1.0 / fs;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    TimeSeries::new(t, v, "bandpass_noise")
}

/// Band-passed noise described by a center frequency and relative
/// bandwidth: the band is `fc * (1 ± rel_bandwidth / 2)`.
pub fn narrowband_gaussian(
    fc: f64,
    rel_bandwidth: f64,
    fs: f64,
    n: usize,
    target_std: f64,
    seed: u64,
) -> Result<TimeSeries> {
    if !(fc > 0.0) || !(rel_bandwidth > 0.0) {
        return Err(Error::InvalidParameter(
            "fc and rel_bandwidth must be positive".into(),
        ));
    }
    let half = fc * rel_bandwidth / 2.0;
    band_passed_gaussian(fc - half, fc + half, fs, n, target_std, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_variance() {
        let s = sine(2.0, 1.0, 100.0, 100.0, 0.0).unwrap();
        assert!((s.variance() - 2.0).abs() / 2.0 < 0.01);
    }

    #[test]
    fn sine_deterministic() {
        let a = sine(1.5, 2.0, 50.0, 10.0, 0.3).unwrap();
        let b = sine(1.5, 2.0, 50.0, 10.0, 0.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bandpass_noise_reproducible_and_normalized() {
        let a = band_passed_gaussian(0.95, 1.05, 50.0, 4096, 1.0, 7).unwrap();
        let b = band_passed_gaussian(0.95, 1.05, 50.0, 4096, 1.0, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.variance() - 1.0).abs() < 1e-12);

        let c = band_passed_gaussian(0.95, 1.05, 50.0, 4096, 1.0, 8).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn bandpass_rejects_bad_band() {
        assert!(band_passed_gaussian(2.0, 1.0, 50.0, 1024, 1.0, 0).is_err());
        assert!(band_passed_gaussian(0.5, 30.0, 50.0, 1024, 1.0, 0).is_err());
    }

    #[test]
    fn narrowband_wrapper_band() {
        let s = narrowband_gaussian(1.0, 0.05, 50.0, 8192, 1.0, 3).unwrap();
        assert_eq!(s.len(), 8192);
        assert!((s.variance() - 1.0).abs() < 1e-12);
    }
}
