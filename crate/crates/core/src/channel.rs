//! Tap channels, per-subcarrier responses, path loss and synthetic fading.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::signal::ComplexSequence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub gain: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Hertz.
    pub doppler: f64,
}

impl Tap {
    pub fn new(gain: Complex64, delay: f64, doppler: f64) -> Self {
        Self { gain, delay, doppler }
    }

    pub fn unit() -> Self {
        Self::new(Complex64::new(1.0, 0.0), 0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    taps: Vec<Tap>,
    /// W/Hz.
    pub noise_psd: f64,
}

impl ChannelProfile {
    pub fn new(taps: Vec<Tap>, noise_psd: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(t) = taps.iter().find(|t| !(t.delay >= 0.0)) {
            return Err(Error::param("delay", format!("must be nonnegative, got {}", t.delay)));
        }
        if !(noise_psd >= 0.0) {
            return Err(Error::param("noise_psd", "must be nonnegative"));
        }
        Ok(Self { taps, noise_psd })
    }

    pub fn identity() -> Self {
        Self {
            taps: vec![Tap::unit()],
            noise_psd: 0.0,
        }
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn noiseless(&self) -> Self {
        Self {
            taps: self.taps.clone(),
            noise_psd: 0.0,
        }
    }
}

/// `H_m = sum_i h_i exp(-j 2 pi m df tau_i) exp(j 2 pi nu_i n / df)` for
/// subcarrier `m` of symbol `n`. The delay sign matches the DFT of a delayed
/// time-domain sequence.
pub fn freq_response(profile: &ChannelProfile, n_subcarriers: usize, subcarrier_spacing: f64, symbol_index: usize) -> Vec<Complex64> {
    let t_sym = 1.0 / subcarrier_spacing;
    (0..n_subcarriers)
        .map(|m| {
            profile
                .taps
                .iter()
                .map(|t| {
                    let ph = -2.0 * PI * m as f64 * subcarrier_spacing * t.delay
                        + 2.0 * PI * t.doppler * symbol_index as f64 * t_sym;
                    t.gain * Complex64::from_polar(1.0, ph)
                })
                .sum()
        })
        .collect()
}

fn sample_delay(delay: f64, spacing: f64) -> Result<usize> {
    let d = delay / spacing;
    let r = d.round();
    if (d - r).abs() > 1e-6 {
        return Err(Error::OffGridDelay { delay, spacing });
    }
    Ok(r as usize)
}

/// `y_k = sum_i h_i x_{k-d_i} exp(j 2 pi nu_i k dt) + w_k` with
/// `w_k ~ CN(0, N0 / dt)`. The output is extended by the largest delay.
pub fn apply_time_channel(x: &ComplexSequence, profile: &ChannelProfile, seed: u64) -> Result<ComplexSequence> {
    let dt = x.spacing();
    let delays = profile
        .taps
        .iter()
        .map(|t| sample_delay(t.delay, dt))
        .collect::<Result<Vec<_>>>()?;
    let max_d = delays.iter().copied().max().unwrap_or(0);
    let len = x.len() + max_d;
    let mut y = vec![Complex64::new(0.0, 0.0); len];
    for (t, &d) in profile.taps.iter().zip(&delays) {
        for (k, xv) in x.samples().iter().enumerate() {
            let idx = k + d;
            let rot = Complex64::from_polar(1.0, 2.0 * PI * t.doppler * idx as f64 * dt);
            y[idx] += t.gain * xv * rot;
        }
    }
    if profile.noise_psd > 0.0 {
        let sigma = (profile.noise_psd / dt / 2.0).sqrt();
        let mut rng = substream(seed, 0);
        for v in y.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(re, im) * sigma;
        }
    }
    ComplexSequence::time(y, dt)
}

/// Intercept of the path-loss law in dB.
pub const PATHLOSS_INTERCEPT_DB: f64 = 48.6;
/// Distance coefficient as printed for the link-budget model.
pub const PATHLOSS_SLOPE_DB: f64 = 3.5;

/// `48.6 + 3.5 log10(d)` dB.
pub fn pathloss_db(distance: f64) -> Result<f64> {
    pathloss_db_with_slope(distance, PATHLOSS_SLOPE_DB)
}

/// `48.6 + slope * log10(d)` dB.
pub fn pathloss_db_with_slope(distance: f64, slope: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::param("distance", format!("must be positive, got {distance}")));
    }
    Ok(PATHLOSS_INTERCEPT_DB + slope * distance.log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FastFading {
    None,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Notch {
    pub center: usize,
    pub depth_db: f64,
    /// Full width in subcarriers.
    pub width: f64,
}

impl Notch {
    /// Attenuation in dB at subcarrier `n`, a raised cosine of the distance.
    pub fn attenuation_db(&self, n: usize) -> f64 {
        let half = self.width / 2.0;
        let dist = (n as f64 - self.center as f64).abs();
        if half <= 0.0 || dist >= half {
            0.0
        } else {
            self.depth_db * 0.5 * (1.0 + (PI * dist / half).cos())
        }
    }
}

/// A realized per-subcarrier power gain profile `|h_n|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProfile {
    pub slow_gain: Vec<f64>,
    pub fast_fading: FastFading,
    pub notches: Vec<Notch>,
    gains: Vec<f64>,
}

impl FadingProfile {
    /// `slow_gain * |g|^2`, or the slow gain alone when fast fading is off.
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn into_gains(self) -> Vec<f64> {
        self.gains
    }
}

pub const DEFAULT_NOTCH_DEPTH_DB: f64 = 20.0;
pub const DEFAULT_NOTCH_WIDTH: f64 = 32.0;

pub fn make_notched_profile(
    n: usize,
    notch_centers: &[usize],
    depth_db: f64,
    width: f64,
    attenuation_db: f64,
    fast: FastFading,
    seed: u64,
) -> Result<FadingProfile> {
    if n == 0 {
        return Err(Error::Empty);
    }
    if let Some(c) = notch_centers.iter().find(|c| **c >= n) {
        return Err(Error::param("notch_centers", format!("center {c} outside [0, {n})")));
    }
    let notches: Vec<Notch> = notch_centers
        .iter()
        .map(|&center| Notch { center, depth_db, width })
        .collect();
    let slow_gain: Vec<f64> = (0..n)
        .map(|k| {
            let db = attenuation_db + notches.iter().map(|nt| nt.attenuation_db(k)).sum::<f64>();
            10f64.powf(-db / 10.0)
        })
        .collect();
    let gains = match fast {
        FastFading::None => slow_gain.clone(),
        FastFading::Rayleigh => {
            let mut rng = substream(seed, 0);
            slow_gain
                .iter()
                .map(|s| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    s * (re * re + im * im) / 2.0
                })
                .collect()
        }
    };
    Ok(FadingProfile {
        slow_gain,
        fast_fading: fast,
        notches,
        gains,
    })
}
