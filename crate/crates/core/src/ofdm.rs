//! OFDM symbol synthesis with per-subcarrier power shaping.
//!
//! Critically sampled baseband: one time sample per subcarrier. The amplitude on
//! subcarrier `m` is `sqrt(X_m)` times a unit-power constellation point, so the
//! data sits in the phase (and, for QAM, the ring) while the allocation alone
//! sets the PSD.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::signal::{idft_slice, map_bits, ComplexSequence, Constellation};

#[derive(Debug, Clone)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    /// Subcarrier spacing in hertz.
    pub subcarrier_spacing: f64,
    /// Cyclic prefix length as a fraction of the body, in `[0, 1)`.
    pub cp_fraction: f64,
    /// Total transmit power in watts.
    pub total_power: f64,
    pub constellation: Constellation,
}

impl OfdmConfig {
    pub fn new(n_subcarriers: usize, subcarrier_spacing: f64, total_power: f64, constellation: Constellation) -> Result<Self> {
        let cfg = Self {
            n_subcarriers,
            subcarrier_spacing,
            cp_fraction: 0.0,
            total_power,
            constellation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_cp_fraction(mut self, cp_fraction: f64) -> Result<Self> {
        self.cp_fraction = cp_fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 2 {
            return Err(Error::param("n_subcarriers", "must be at least 2"));
        }
        if !(self.subcarrier_spacing > 0.0) {
            return Err(Error::param("subcarrier_spacing", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.cp_fraction) {
            return Err(Error::param("cp_fraction", "must lie in [0, 1)"));
        }
        if !(self.total_power > 0.0) {
            return Err(Error::param("total_power", "must be positive"));
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing
    }

    pub fn sample_spacing(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    pub fn cp_len(&self) -> usize {
        (self.cp_fraction * self.n_subcarriers as f64).ceil() as usize
    }

    pub fn flat_allocation(&self) -> PowerAllocation {
        PowerAllocation::flat(self.n_subcarriers, self.total_power / self.n_subcarriers as f64)
    }
}

/// Per-subcarrier power vector `X_n` together with its mean power `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    levels: Vec<f64>,
    mean_power: f64,
}

impl PowerAllocation {
    /// Default relative tolerance on `sum X = N P`.
    pub const POWER_TOL: f64 = 1e-9;

    pub fn new(levels: Vec<f64>, mean_power: f64) -> Result<Self> {
        Self::with_tolerance(levels, mean_power, Self::POWER_TOL)
    }

    pub fn with_tolerance(levels: Vec<f64>, mean_power: f64, rel_tol: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(v) = levels.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("levels", format!("entries must be finite and nonnegative, found {v}")));
        }
        let target = levels.len() as f64 * mean_power;
        let total: f64 = levels.iter().sum();
        if (total - target).abs() > rel_tol * target.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::param(
                "levels",
                format!("total power {total} differs from N*P = {target}"),
            ));
        }
        Ok(Self { levels, mean_power })
    }

    pub fn flat(n: usize, mean_power: f64) -> Self {
        Self {
            levels: vec![mean_power; n],
            mean_power,
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<f64> {
        self.levels
    }

    pub fn mean_power(&self) -> f64 {
        self.mean_power
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.levels.iter().sum()
    }

    /// `sum (X_n - P)^2`, the spectral-flatness surrogate for ISL.
    pub fn variance_sum(&self) -> f64 {
        variance_sum(&self.levels, self.mean_power)
    }
}

pub fn variance_sum(levels: &[f64], mean_power: f64) -> f64 {
    levels.iter().map(|x| (x - mean_power).powi(2)).sum()
}

/// Frequency-domain symbols `sqrt(X_m) * s_m`.
pub fn shape_symbols(symbols: &[Complex64], alloc: &PowerAllocation) -> Result<Vec<Complex64>> {
    if symbols.len() != alloc.len() {
        return Err(Error::LengthMismatch {
            expected: alloc.len(),
            got: symbols.len(),
        });
    }
    Ok(symbols
        .iter()
        .zip(alloc.levels())
        .map(|(s, x)| s * x.sqrt())
        .collect())
}

/// Time-domain OFDM symbol from already-mapped data symbols. The body is the
/// unitary IDFT of the shaped spectrum; the cyclic prefix is prepended.
pub fn modulate_symbols(cfg: &OfdmConfig, alloc: &PowerAllocation, symbols: &[Complex64]) -> Result<ComplexSequence> {
    cfg.validate()?;
    if alloc.len() != cfg.n_subcarriers {
        return Err(Error::LengthMismatch {
            expected: cfg.n_subcarriers,
            got: alloc.len(),
        });
    }
    let shaped = shape_symbols(symbols, alloc)?;
    let body = idft_slice(&shaped);
    let cp = cfg.cp_len();
    let mut out = Vec::with_capacity(cp + body.len());
    out.extend_from_slice(&body[body.len() - cp..]);
    out.extend_from_slice(&body);
    ComplexSequence::time(out, cfg.sample_spacing())
}

/// One OFDM symbol from a bit list of length `N_s * bits_per_symbol`.
pub fn modulate_symbol(cfg: &OfdmConfig, alloc: &PowerAllocation, bits: &[bool]) -> Result<ComplexSequence> {
    let need = cfg.n_subcarriers * cfg.constellation.bits_per_symbol();
    if bits.len() != need {
        return Err(Error::LengthMismatch {
            expected: need,
            got: bits.len(),
        });
    }
    let symbols = map_bits(bits, &cfg.constellation)?;
    modulate_symbols(cfg, alloc, &symbols)
}

/// Body (CP stripped) of a random-data OFDM symbol.
pub fn random_body<R: Rng + ?Sized>(cfg: &OfdmConfig, alloc: &PowerAllocation, rng: &mut R) -> Result<Vec<Complex64>> {
    let symbols = cfg.constellation.random_symbols(cfg.n_subcarriers, rng);
    let shaped = shape_symbols(&symbols, alloc)?;
    Ok(idft_slice(&shaped))
}

/// Frequency-domain channel `Y_m = H_m X_m + N_m`, with `N_m ~ CN(0, N0 * df)`.
pub fn apply_freq_channel(
    input: &[Complex64],
    response: &[Complex64],
    noise_psd: f64,
    subcarrier_spacing: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if input.len() != response.len() {
        return Err(Error::LengthMismatch {
            expected: input.len(),
            got: response.len(),
        });
    }
    if !(noise_psd >= 0.0) {
        return Err(Error::param("noise_psd", format!("must be nonnegative, got {noise_psd}")));
    }
    let sigma = (noise_psd * subcarrier_spacing / 2.0).sqrt();
    let mut rng = substream(seed, 0);
    Ok(input
        .iter()
        .zip(response)
        .map(|(x, h)| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            h * x + Complex64::new(re, im) * sigma
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{psd_slice, Modulation};
    use approx::assert_relative_eq;

    fn cfg(n: usize, m: Modulation) -> OfdmConfig {
        OfdmConfig::new(n, 1e6, 1.0, Constellation::new(m)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(OfdmConfig::new(1, 1e6, 1.0, Constellation::qpsk()).is_err());
        assert!(OfdmConfig::new(8, 0.0, 1.0, Constellation::qpsk()).is_err());
        assert!(cfg(8, Modulation::Qpsk).with_cp_fraction(1.0).is_err());
        assert_relative_eq!(cfg(8, Modulation::Qpsk).bandwidth(), 8e6);
    }

    #[test]
    fn allocation_invariants() {
        assert!(PowerAllocation::new(vec![1.0, -0.1, 1.1], 2.0 / 3.0).is_err());
        assert!(PowerAllocation::new(vec![1.0, 1.0], 2.0).is_err());
        let a = PowerAllocation::new(vec![0.5, 1.5], 1.0).unwrap();
        assert_relative_eq!(a.variance_sum(), 0.5);
    }

    #[test]
    fn equal_symbols_give_impulse() {
        let c = cfg(16, Modulation::Qpsk);
        let alloc = c.flat_allocation();
        let x = modulate_symbol(&c, &alloc, &vec![false; 32]).unwrap();
        assert_eq!(x.len(), 16);
        let s = x.samples();
        assert!(s[0].norm() > 0.0);
        assert!(s[1..].iter().all(|v| v.norm() < 1e-12));
        assert_relative_eq!(x.energy(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cyclic_prefix_is_prepended() {
        let c = cfg(16, Modulation::Qpsk).with_cp_fraction(0.25).unwrap();
        let alloc = c.flat_allocation();
        let bits: Vec<bool> = (0..32).map(|i| i % 3 == 0).collect();
        let x = modulate_symbol(&c, &alloc, &bits).unwrap();
        assert_eq!(x.len(), 20);
        assert_eq!(&x.samples()[..4], &x.samples()[16..]);
    }

    #[test]
    fn bit_length_is_checked() {
        let c = cfg(8, Modulation::Qpsk);
        assert!(matches!(
            modulate_symbol(&c, &c.flat_allocation(), &[true; 15]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn qpsk_flat_body_has_flat_psd_and_exact_energy() {
        let c = cfg(1024, Modulation::Qpsk);
        let alloc = c.flat_allocation();
        let body = random_body(&c, &alloc, &mut substream(1, 0)).unwrap();
        let p = psd_slice(&body);
        let p0 = 1.0 / 1024.0;
        assert!(p.iter().all(|v| ((v - p0) / p0).abs() < 1e-9));
        let e: f64 = body.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(e, alloc.total(), max_relative = 1e-9);
    }

    #[test]
    fn qam_energy_matches_allocation_on_average() {
        let c = cfg(256, Modulation::Qam64);
        let alloc = c.flat_allocation();
        let mut rng = substream(2, 0);
        let trials = 400;
        let e: f64 = (0..trials)
            .map(|_| random_body(&c, &alloc, &mut rng).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / trials as f64;
        assert!((e - 1.0).abs() < 0.01, "{e}");
    }

    #[test]
    fn freq_channel_identity_noise_and_determinism() {
        let x: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let h = vec![Complex64::new(1.0, 0.0); 8];
        assert_eq!(apply_freq_channel(&x, &h, 0.0, 1e3, 5).unwrap(), x);
        assert!(apply_freq_channel(&x, &h, -1.0, 1e3, 5).is_err());
        assert!(apply_freq_channel(&x, &h[..4], 0.0, 1e3, 5).is_err());

        let n = 100_000;
        let zeros = vec![Complex64::new(0.0, 0.0); n];
        let (n0, df) = (2e-9, 1e3);
        let y = apply_freq_channel(&zeros, &zeros, n0, df, 9).unwrap();
        let var = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var / (n0 * df) - 1.0).abs() < 0.02, "{var}");
        assert_eq!(y, apply_freq_channel(&zeros, &zeros, n0, df, 9).unwrap());
    }
}
