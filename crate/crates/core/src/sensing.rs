//! Sensing metrics: sidelobe levels, the aperiodic/circular ISL gap, the
//! ranging Cramér–Rao bound, sensing spectral efficiency, RMS bandwidth,
//! matched-filter delay estimation and the far-field imaging SNR model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ofdm::{random_body, OfdmConfig};
use crate::par::map_indexed;
use crate::rng::{derive_seed, substream};
use crate::signal::{
    acorr_aperiodic_slice, acorr_circular_slice, fft_in_place, idft_slice, ifft_in_place, psd_slice,
    ComplexSequence, Constellation, Modulation,
};
use crate::stats::mean;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IslMode {
    Aperiodic,
    Circular,
}

fn check_signal(x: &[Complex64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::param("x", "need at least 2 samples"));
    }
    let e: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if !(e > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    Ok(e)
}

/// Normalized ISL `sum_{l=1}^{N-1} |r(l)|^2 / |r(0)|^2`.
///
/// The aperiodic sum covers positive lags only; the circular sum over
/// `l = 1..N-1` already contains both sides of the mainlobe.
pub fn isl_slice(x: &[Complex64], mode: IslMode) -> Result<f64> {
    check_signal(x)?;
    let r = match mode {
        IslMode::Aperiodic => acorr_aperiodic_slice(x),
        IslMode::Circular => acorr_circular_slice(x),
    };
    let r0 = r[0].norm_sqr();
    Ok(r[1..].iter().map(|v| v.norm_sqr()).sum::<f64>() / r0)
}

pub fn isl(x: &ComplexSequence, mode: IslMode) -> Result<f64> {
    isl_slice(x.samples(), mode)
}

/// Peak aperiodic sidelobe normalized by the energy, `max_{l>0} |r(l)| / r(0)`.
pub fn psl_slice(x: &[Complex64]) -> Result<f64> {
    let e = check_signal(x)?;
    let r = acorr_aperiodic_slice(x);
    Ok(r[1..].iter().map(|v| v.norm()).fold(0.0, f64::max) / e)
}

pub fn psl(x: &ComplexSequence) -> Result<f64> {
    psl_slice(x.samples())
}

/// `sqrt(2 ln N / N)`, the asymptotic normalized PSL of random binary codes.
pub fn psl_law(n: usize) -> f64 {
    let n = n as f64;
    (2.0 * n.ln() / n).sqrt()
}

/// Normalized PSL of `trials` random `+-1` sequences of length `n`.
pub fn psl_trials(n: usize, trials: usize, seed: u64) -> Vec<f64> {
    map_indexed(trials, |t| {
        let mut rng = substream(seed, t as u64);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        psl_slice(&x).expect("nonzero binary sequence")
    })
}

/// Aperiodic ISL of `trials` random-data OFDM bodies with flat allocation.
pub fn ofdm_isl_trials(n: usize, modulation: Modulation, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let cfg = OfdmConfig::new(n, 1.0, n as f64, Constellation::new(modulation))?;
    let alloc = cfg.flat_allocation();
    let out = map_indexed(trials, |t| {
        let body = random_body(&cfg, &alloc, &mut substream(seed, t as u64))?;
        isl_slice(&body, IslMode::Aperiodic)
    });
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IslGapRow {
    pub n: usize,
    /// Mean over trials of `|2 ISL_aper - ISL_circ| / ISL_circ`.
    pub mean_rel_err: f64,
    pub std_err: f64,
    /// `|2 mean(ISL_aper) - mean(ISL_circ)| / mean(ISL_circ)`.
    pub rel_err_of_means: f64,
    /// Mean over trials of `|ISL_aper - ISL_circ| / ISL_circ`, one-sided lags.
    pub mean_rel_err_one_sided: f64,
    pub mean_isl_aperiodic: f64,
    pub mean_isl_circular: f64,
}

/// Relative gap between aperiodic and circular ISL on random time-domain
/// symbol sequences. The aperiodic ISL is doubled so both sides count the
/// same lags.
pub fn isl_gap_curve(ns: &[usize], trials: usize, constellation: &Constellation, seed: u64) -> Result<Vec<IslGapRow>> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if let Some(n) = ns.iter().find(|n| **n < 4) {
        return Err(Error::param("n", format!("must be at least 4, got {n}")));
    }
    ns.iter()
        .map(|&n| {
            let s = derive_seed(seed, n as u64);
            let pairs = map_indexed(trials, |t| {
                let x = constellation.random_symbols(n, &mut substream(s, t as u64));
                let a = isl_slice(&x, IslMode::Aperiodic)?;
                let c = isl_slice(&x, IslMode::Circular)?;
                Ok((a, c))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let rel: Vec<f64> = pairs.iter().map(|(a, c)| (2.0 * a - c).abs() / c).collect();
            let one: Vec<f64> = pairs.iter().map(|(a, c)| (a - c).abs() / c).collect();
            let ma = mean(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let mc = mean(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            Ok(IslGapRow {
                n,
                mean_rel_err: mean(&rel),
                std_err: crate::stats::std_error(&rel),
                rel_err_of_means: (2.0 * ma - mc).abs() / mc,
                mean_rel_err_one_sided: mean(&one),
                mean_isl_aperiodic: ma,
                mean_isl_circular: mc,
            })
        })
        .collect()
}

/// Trapezoidal rule on a uniform grid.
pub fn trapezoid(y: &[f64], dx: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => dx * (y[1..n - 1].iter().sum::<f64>() + 0.5 * (y[0] + y[n - 1])),
    }
}

/// Ranging problem `Y(jw) = A exp(-j tau w) X(jw) + N(jw)` over the band
/// `[w_c - W/2, w_c + W/2]`, with `|X(jw)|^2` sampled uniformly on it.
#[derive(Debug, Clone, PartialEq)]
pub struct RangingScenario {
    pub attenuation: f64,
    /// rad/s.
    pub carrier: f64,
    /// rad/s.
    pub bandwidth: f64,
    /// W/Hz.
    pub noise_psd: f64,
    psd: Vec<f64>,
}

impl RangingScenario {
    pub fn new(attenuation: f64, carrier: f64, bandwidth: f64, noise_psd: f64, psd: Vec<f64>) -> Result<Self> {
        if psd.len() < 2 {
            return Err(Error::Empty);
        }
        if !(bandwidth > 0.0) {
            return Err(Error::param("bandwidth", "must be positive"));
        }
        if !(attenuation > 0.0) {
            return Err(Error::param("attenuation", "must be positive"));
        }
        if !(noise_psd > 0.0) {
            return Err(Error::param("noise_psd", "must be positive"));
        }
        if psd.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::param("psd", "samples must be nonnegative"));
        }
        Ok(Self {
            attenuation,
            carrier,
            bandwidth,
            noise_psd,
            psd,
        })
    }

    /// Flat PSD `p0` on `points` grid samples.
    pub fn flat(attenuation: f64, carrier: f64, bandwidth: f64, noise_psd: f64, p0: f64, points: usize) -> Result<Self> {
        Self::new(attenuation, carrier, bandwidth, noise_psd, vec![p0; points])
    }

    pub fn psd(&self) -> &[f64] {
        &self.psd
    }

    pub fn grid_step(&self) -> f64 {
        self.bandwidth / (self.psd.len() - 1) as f64
    }

    /// Angular frequency of each PSD sample.
    pub fn omega(&self) -> Vec<f64> {
        let h = self.grid_step();
        let lo = self.carrier - self.bandwidth / 2.0;
        (0..self.psd.len()).map(|i| lo + i as f64 * h).collect()
    }

    /// `beta = w_c / W`.
    pub fn beta(&self) -> f64 {
        self.carrier / self.bandwidth
    }
}

/// `I = A^2 / (N0 W) * int w^2 |X(jw)|^2 dw`, in 1/s^2.
pub fn fisher_info(s: &RangingScenario) -> f64 {
    let w = s.omega();
    let integrand: Vec<f64> = w.iter().zip(s.psd()).map(|(w, p)| w * w * p).collect();
    s.attenuation.powi(2) / (s.noise_psd * s.bandwidth) * trapezoid(&integrand, s.grid_step())
}

/// Ranging MSE bound `c^2 / I`, in m^2.
pub fn crb_ranging_mse(s: &RangingScenario) -> Result<f64> {
    let i = fisher_info(s);
    if !(i > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    Ok(SPEED_OF_LIGHT.powi(2) / i)
}

/// Sensing spectral efficiency `sqrt(I) / (c W)`.
pub fn sensing_se(s: &RangingScenario) -> f64 {
    fisher_info(s).sqrt() / (SPEED_OF_LIGHT * s.bandwidth)
}

/// Closed form of [`sensing_se`] for a flat PSD `p0`.
pub fn sensing_se_flat(attenuation: f64, p0: f64, beta: f64, noise_psd: f64) -> f64 {
    attenuation * (p0 * (beta * beta + 1.0 / 12.0)).sqrt() / (SPEED_OF_LIGHT * noise_psd.sqrt())
}

/// RMS bandwidth in hertz about the centre of the frequency grid.
pub fn rms_bandwidth(psd: &[f64], freqs: &[f64]) -> Result<f64> {
    if psd.len() != freqs.len() {
        return Err(Error::LengthMismatch {
            expected: freqs.len(),
            got: psd.len(),
        });
    }
    if psd.len() < 2 {
        return Err(Error::Empty);
    }
    let df = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
    let f_ref = 0.5 * (freqs[0] + freqs[freqs.len() - 1]);
    let e = trapezoid(psd, df);
    if !(e > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let m2: Vec<f64> = psd
        .iter()
        .zip(freqs)
        .map(|(p, f)| (2.0 * PI * (f - f_ref)).powi(2) * p)
        .collect();
    Ok((trapezoid(&m2, df) / e).sqrt() / (2.0 * PI))
}

/// Parabolic vertex offset in `(-0.5, 0.5)` from three samples around a peak.
fn parabolic_offset(l: f64, c: f64, r: f64) -> f64 {
    let den = l - 2.0 * c + r;
    if den.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        (0.5 * (l - r) / den).clamp(-0.5, 0.5)
    }
}

/// Peak lag, in samples, of the correlation whose spectrum is `cross`
/// (natural FFT order), interpolated by spectral zero padding and a parabola.
/// The result lies in `(-L/2, L/2]`.
fn correlation_peak(cross: &[Complex64], upsample: usize) -> f64 {
    let l = cross.len();
    let u = upsample.max(1);
    let big = l * u;
    let mut buf = vec![Complex64::new(0.0, 0.0); big];
    let half = l / 2;
    buf[..half].copy_from_slice(&cross[..half]);
    buf[big - (l - half)..].copy_from_slice(&cross[half..]);
    ifft_in_place(&mut buf);
    let mag: Vec<f64> = buf.iter().map(|v| v.norm()).collect();
    let (idx, _) = mag
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let left = mag[(idx + big - 1) % big];
    let right = mag[(idx + 1) % big];
    let mut lag = (idx as f64 + parabolic_offset(left, mag[idx], right)) / u as f64;
    if lag > l as f64 / 2.0 {
        lag -= l as f64;
    }
    lag
}

/// Delay of `y` relative to `x_ref` from the matched-filter peak, in seconds.
pub fn estimate_delay_mf(y: &ComplexSequence, x_ref: &ComplexSequence, upsample: usize) -> Result<f64> {
    if y.len() < x_ref.len() {
        return Err(Error::LengthMismatch {
            expected: x_ref.len(),
            got: y.len(),
        });
    }
    let l = (y.len() + x_ref.len()).next_power_of_two();
    let mut ys = vec![Complex64::new(0.0, 0.0); l];
    let mut xs = ys.clone();
    ys[..y.len()].copy_from_slice(y.samples());
    xs[..x_ref.len()].copy_from_slice(x_ref.samples());
    fft_in_place(&mut ys);
    fft_in_place(&mut xs);
    let cross: Vec<Complex64> = ys.iter().zip(&xs).map(|(a, b)| a * b.conj()).collect();
    Ok(correlation_peak(&cross, upsample) * y.spacing())
}

/// Circular matched-filter delay estimate for equal-length `y` and `x_ref`.
pub fn estimate_delay_circular(y: &[Complex64], x_ref: &[Complex64], spacing: f64, upsample: usize) -> Result<f64> {
    if y.len() != x_ref.len() {
        return Err(Error::LengthMismatch {
            expected: x_ref.len(),
            got: y.len(),
        });
    }
    let mut ys = y.to_vec();
    let mut xs = x_ref.to_vec();
    fft_in_place(&mut ys);
    fft_in_place(&mut xs);
    let cross: Vec<Complex64> = ys.iter().zip(&xs).map(|(a, b)| a * b.conj()).collect();
    Ok(correlation_peak(&cross, upsample) * spacing)
}

/// Signed FFT bin frequencies `k / (N dt)` with the Nyquist bin on the
/// negative side.
fn fft_freqs(n: usize, dt: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let k = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            k / (n as f64 * dt)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrbSimConfig {
    /// Samples per OFDM body.
    pub n: usize,
    /// Hertz; the sample spacing is `1 / bandwidth`.
    pub bandwidth_hz: f64,
    /// Per-sample SNR in dB.
    pub snr_db: f64,
    pub attenuation: f64,
    pub upsample: usize,
    /// Integer part of the true delay, in samples.
    pub base_delay: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for CrbSimConfig {
    fn default() -> Self {
        Self {
            n: 64,
            bandwidth_hz: 1e9,
            snr_db: 20.0,
            attenuation: 1.0,
            upsample: 32,
            base_delay: 5,
            trials: 1000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrbSimResult {
    pub snr_db: f64,
    /// Empirical ranging MSE, m^2.
    pub mse: f64,
    /// m^2.
    pub crb: f64,
    pub ratio: f64,
    /// Standard error of `ratio` over trials.
    pub ratio_se: f64,
}

/// Monte Carlo matched-filter ranging on a flat QPSK OFDM body with a random
/// fractional circular delay, compared against [`crb_ranging_mse`].
///
/// The body has unit power per sample, so `E_s = N`. The continuous model uses
/// `|X(jw)|^2 = E_s / W` across the band and `N0 = sigma^2 / (2 W)` with `W`
/// in rad/s.
pub fn crb_monte_carlo(cfg: &CrbSimConfig) -> Result<CrbSimResult> {
    if cfg.n < 4 || cfg.trials == 0 || !(cfg.bandwidth_hz > 0.0) {
        return Err(Error::param("crb", "need n >= 4, trials >= 1 and positive bandwidth"));
    }
    let n = cfg.n;
    let dt = 1.0 / cfg.bandwidth_hz;
    let w = 2.0 * PI * cfg.bandwidth_hz;
    let e_s = n as f64;
    let sigma2 = cfg.attenuation.powi(2) * 10f64.powf(-cfg.snr_db / 10.0);
    let freqs = fft_freqs(n, dt);
    let qpsk = Constellation::qpsk();
    let sq_err = map_indexed(cfg.trials, |t| {
        let mut rng = substream(cfg.seed, t as u64);
        let spec = qpsk.random_symbols(n, &mut rng);
        let tau = (cfg.base_delay as f64 + rng.random::<f64>()) * dt;
        let x = idft_slice(&spec);
        let delayed: Vec<Complex64> = spec
            .iter()
            .zip(&freqs)
            .map(|(s, f)| s * Complex64::from_polar(cfg.attenuation, -2.0 * PI * f * tau))
            .collect();
        let sd = (sigma2 / 2.0).sqrt();
        let y: Vec<Complex64> = idft_slice(&delayed)
            .into_iter()
            .map(|v| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                v + Complex64::new(re, im) * sd
            })
            .collect();
        let est = estimate_delay_circular(&y, &x, dt, cfg.upsample).expect("equal lengths");
        ((est - tau) * SPEED_OF_LIGHT).powi(2)
    });
    let mse = mean(&sq_err);
    let scenario = RangingScenario::flat(cfg.attenuation, 0.0, w, sigma2 / (2.0 * w), e_s / w, 4097)?;
    let crb = crb_ranging_mse(&scenario)?;
    Ok(CrbSimResult {
        snr_db: cfg.snr_db,
        mse,
        crb,
        ratio: mse / crb,
        ratio_se: crate::stats::std_error(&sq_err) / crb,
    })
}

/// Far-field imaging grid: sources at `m = -K..=K`, sensors at `p = 1..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingGeometry {
    pub k_grid: usize,
    pub n_sensors: usize,
    pub delta_l: f64,
    pub delta_k: f64,
}

impl ImagingGeometry {
    pub const MAX_SIDE: usize = 8;

    fn matrix(&self, k: f64) -> Vec<Vec<Complex64>> {
        let kk = self.k_grid as i64;
        (1..=self.n_sensors as i64)
            .map(|p| {
                (-kk..=kk)
                    .map(|m| Complex64::from_polar(1.0, -k * self.delta_k * (p * m) as f64 * self.delta_l.powi(2)))
                    .collect()
            })
            .collect()
    }
}

/// `trace(H H^H) / sigma^2` with `sigma^2 = 1` and
/// `H = mean_{k in [K1, K2)} F_k (x) F_k^T`.
pub fn imaging_snr(k1: usize, k2: usize, g: &ImagingGeometry) -> Result<f64> {
    if k2 <= k1 {
        return Err(Error::param("k2", "must exceed k1"));
    }
    if g.k_grid > ImagingGeometry::MAX_SIDE || g.n_sensors > ImagingGeometry::MAX_SIDE || g.n_sensors == 0 {
        return Err(Error::SizeGuard(format!(
            "imaging grid K={}, N={} exceeds {}",
            g.k_grid,
            g.n_sensors,
            ImagingGeometry::MAX_SIDE
        )));
    }
    let rows = g.n_sensors;
    let cols = 2 * g.k_grid + 1;
    let dim = rows * cols;
    let mut h = vec![Complex64::new(0.0, 0.0); dim * dim];
    let d = (k2 - k1) as f64;
    for k in k1..k2 {
        let f = g.matrix(k as f64);
        // (F (x) F^T)[(p, m'), (m, p')] = F[p][m] * F[p'][m']
        for p in 0..rows {
            for m2 in 0..cols {
                let r = p * cols + m2;
                for m in 0..cols {
                    for p2 in 0..rows {
                        let c = m * rows + p2;
                        h[r * dim + c] += f[p][m] * f[p2][m2] / d;
                    }
                }
            }
        }
    }
    Ok(h.iter().map(|v| v.norm_sqr()).sum())
}

/// Imaging SNR for each span `K2 - K1` in `spans`, with `K1` fixed.
pub fn imaging_convergence(k1: usize, spans: &[usize], g: &ImagingGeometry) -> Result<Vec<f64>> {
    spans.iter().map(|s| imaging_snr(k1, k1 + s, g)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensingReport {
    pub isl: f64,
    pub psl: f64,
    /// Hz.
    pub rms_bandwidth: f64,
    /// m^2.
    pub crb_mse: f64,
    /// 1/s^2.
    pub fisher_info: f64,
    pub sensing_se: f64,
}

impl SensingReport {
    /// Sidelobe metrics and RMS bandwidth of `x` (spectrum centred on the
    /// band), plus the ranging figures of `scenario`.
    pub fn evaluate(x: &ComplexSequence, scenario: &RangingScenario) -> Result<Self> {
        let n = x.len();
        let mut p = psd_slice(x.samples());
        p.rotate_right(n / 2);
        let df = 1.0 / (n as f64 * x.spacing());
        let freqs: Vec<f64> = (0..n).map(|k| (k as f64 - (n / 2) as f64) * df).collect();
        let fi = fisher_info(scenario);
        Ok(Self {
            isl: isl(x, IslMode::Aperiodic)?,
            psl: psl(x)?,
            rms_bandwidth: rms_bandwidth(&p, &freqs)?,
            crb_mse: crb_ranging_mse(scenario)?,
            fisher_info: fi,
            sensing_se: sensing_se(scenario),
        })
    }
}
