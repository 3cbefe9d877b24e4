//! Communication metrics: Gaussian and QPSK spectral efficiency, sum rate,
//! link-budget sweeps and the QPSK-vs-Gaussian gap region.

use std::f64::consts::{LOG2_E, PI};
use std::sync::OnceLock;

use serde::Serialize;

use crate::channel::{pathloss_db_with_slope, PATHLOSS_SLOPE_DB};
use crate::error::{Error, Result};

/// `log2(1 + snr)`.
pub fn gaussian_se(snr: f64) -> f64 {
    snr.max(0.0).ln_1p() * LOG2_E
}

/// Gauss–Hermite nodes and weights for `int exp(-x^2) f(x) dx`.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

pub const GH_ORDER: usize = 64;

fn gh64() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_hermite(GH_ORDER))
}

/// `ln cosh(u)`, accurate for small `u` and safe for large `|u|`.
fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    if a > 20.0 {
        a - std::f64::consts::LN_2 + (-2.0 * a).exp()
    } else {
        (2.0 * (0.5 * a).sinh().powi(2)).ln_1p()
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Binary-input real AWGN mutual information at SNR `rho`:
/// `1 - E_z[log2(1 + exp(-2 rho - 2 sqrt(rho) z))]`.
///
/// Below unit SNR the same integral is evaluated as
/// `(rho - E[ln cosh(rho + sqrt(rho) z)]) / ln 2`, with the leading `1`
/// cancelled analytically, so small values keep full relative precision.
pub fn bpsk_mi(rho: f64) -> f64 {
    if !(rho > 0.0) {
        return 0.0;
    }
    let (x, w) = gh64();
    let s = rho.sqrt() * std::f64::consts::SQRT_2;
    let bits = if rho < 1.0 {
        let e: f64 = x.iter().zip(w).map(|(xi, wi)| wi * ln_cosh(rho + s * xi)).sum::<f64>() / PI.sqrt();
        (rho - e) * LOG2_E
    } else {
        let e: f64 = x.iter().zip(w).map(|(xi, wi)| wi * softplus(-2.0 * (rho + s * xi))).sum::<f64>() / PI.sqrt();
        1.0 - e * LOG2_E
    };
    bits.clamp(0.0, 1.0)
}

/// Equiprobable QPSK mutual information over complex AWGN at symbol SNR `snr`,
/// in bits per channel use. Capped at the Gaussian value, which it can only
/// exceed by rounding.
pub fn qpsk_mi(snr: f64) -> f64 {
    (2.0 * bpsk_mi(snr)).min(gaussian_se(snr))
}

/// `(gaussian - qpsk) / gaussian`, zero at zero SNR.
pub fn relative_gap(snr: f64) -> f64 {
    let g = gaussian_se(snr);
    if g <= 0.0 {
        0.0
    } else {
        (g - qpsk_mi(snr)) / g
    }
}

fn check_lengths(levels: &[f64], gains: &[f64]) -> Result<()> {
    if levels.len() != gains.len() {
        return Err(Error::LengthMismatch {
            expected: gains.len(),
            got: levels.len(),
        });
    }
    Ok(())
}

/// Per-subcarrier SNR per unit power, `gamma_n = |h_n|^2 N / (N0 B)`.
pub fn subcarrier_gamma(gains: &[f64], noise_psd: f64, bandwidth: f64) -> Vec<f64> {
    let n = gains.len() as f64;
    gains.iter().map(|g| g * n / (noise_psd * bandwidth)).collect()
}

/// `sum_n log2(1 + gamma_n X_n)` in bits per channel use.
pub fn sum_rate_per_use(levels: &[f64], gains: &[f64], noise_psd: f64, bandwidth: f64) -> Result<f64> {
    check_lengths(levels, gains)?;
    Ok(subcarrier_gamma(gains, noise_psd, bandwidth)
        .iter()
        .zip(levels)
        .map(|(g, x)| gaussian_se(g * x))
        .sum())
}

/// `sum_n (B/N) log2(1 + |h_n|^2 X_n / (N0 B / N))` in bits/s.
pub fn sum_rate(levels: &[f64], gains: &[f64], noise_psd: f64, bandwidth: f64) -> Result<f64> {
    let per_use = sum_rate_per_use(levels, gains, noise_psd, bandwidth)?;
    Ok(per_use * bandwidth / gains.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Signaling {
    Gaussian,
    Qpsk,
}

impl Signaling {
    pub fn se(self, snr: f64) -> f64 {
        match self {
            Signaling::Gaussian => gaussian_se(snr),
            Signaling::Qpsk => qpsk_mi(snr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// W.
    pub tx_power: f64,
    /// m.
    pub distance: f64,
    /// Hz.
    pub bandwidth: f64,
    /// W/Hz.
    pub noise_psd: f64,
    /// dB per decade of distance in the path-loss law.
    pub pathloss_slope: f64,
}

impl LinkBudget {
    pub fn new(tx_power: f64, distance: f64, bandwidth: f64, noise_psd: f64) -> Result<Self> {
        let b = Self {
            tx_power,
            distance,
            bandwidth,
            noise_psd,
            pathloss_slope: PATHLOSS_SLOPE_DB,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_slope(mut self, slope: f64) -> Self {
        self.pathloss_slope = slope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tx_power", self.tx_power),
            ("distance", self.distance),
            ("bandwidth", self.bandwidth),
            ("noise_psd", self.noise_psd),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Received SNR with flat power over the band.
    pub fn snr(&self) -> Result<f64> {
        self.validate()?;
        let loss = pathloss_db_with_slope(self.distance, self.pathloss_slope)?;
        Ok(self.tx_power * 10f64.powf(-loss / 10.0) / (self.noise_psd * self.bandwidth))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeRow {
    pub distance: f64,
    pub snr_db: f64,
    pub gaussian_se: f64,
    pub qpsk_se: f64,
    pub relative_gap: f64,
    /// bits/s.
    pub gaussian_rate: f64,
    pub qpsk_rate: f64,
}

/// Spectral efficiency of both signalings over `distances`, with everything
/// else taken from `budget`.
pub fn se_vs_distance(budget: &LinkBudget, distances: &[f64]) -> Result<Vec<SeRow>> {
    let mut ds = distances.to_vec();
    ds.sort_by(f64::total_cmp);
    ds.iter()
        .map(|&d| {
            let b = LinkBudget { distance: d, ..*budget };
            let snr = b.snr()?;
            let g = gaussian_se(snr);
            let q = qpsk_mi(snr);
            Ok(SeRow {
                distance: d,
                snr_db: 10.0 * snr.log10(),
                gaussian_se: g,
                qpsk_se: q,
                relative_gap: relative_gap(snr),
                gaussian_rate: g * b.bandwidth,
                qpsk_rate: q * b.bandwidth,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRegionRow {
    pub tolerance: f64,
    pub power: f64,
    pub distance: f64,
    /// Smallest grid bandwidth meeting the tolerance; 0 when none does.
    pub min_bandwidth: f64,
    pub feasible: bool,
}

/// For each `(power, distance)`, the smallest bandwidth on the grid at which
/// QPSK falls short of Gaussian signaling by at most `tolerance` (relative).
pub fn gap_region(
    powers: &[f64],
    distances: &[f64],
    bandwidths: &[f64],
    tolerance: f64,
    noise_psd: f64,
    pathloss_slope: f64,
) -> Result<Vec<GapRegionRow>> {
    if powers.is_empty() || distances.is_empty() || bandwidths.is_empty() {
        return Err(Error::Empty);
    }
    if !(tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let mut bws = bandwidths.to_vec();
    bws.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(powers.len() * distances.len());
    for &p in powers {
        for &d in distances {
            let mut hit = None;
            for &b in &bws {
                let snr = LinkBudget::new(p, d, b, noise_psd)?.with_slope(pathloss_slope).snr()?;
                if relative_gap(snr) <= tolerance {
                    hit = Some(b);
                    break;
                }
            }
            out.push(GapRegionRow {
                tolerance,
                power: p,
                distance: d,
                min_bandwidth: hit.unwrap_or(0.0),
                feasible: hit.is_some(),
            });
        }
    }
    out.sort_by(|a, b| a.power.total_cmp(&b.power).then(a.distance.total_cmp(&b.distance)));
    Ok(out)
}
