//! Complex sequences, constellations, unitary DFT, autocorrelation and PSD.
//!
//! All transforms use the unitary convention: both the forward and inverse DFT
//! are scaled by `1/sqrt(N)`. Under this convention Parseval holds without
//! stray factors, `psd(x)` sums to `energy(x)`, and the circular
//! autocorrelation satisfies `dft(r_c)[k] = sqrt(N) * psd(x)[k]`.

use std::cell::RefCell;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Whether a sequence lives in time or in frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Time,
    Frequency,
}

/// Finite complex sequence with an explicit sample spacing
/// (seconds in the time domain, hertz in the frequency domain).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    samples: Vec<Complex64>,
    spacing: f64,
    domain: Domain,
}

impl ComplexSequence {
    pub fn new(samples: Vec<Complex64>, spacing: f64, domain: Domain) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty);
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param("spacing", format!("must be positive, got {spacing}")));
        }
        Ok(Self {
            samples,
            spacing,
            domain,
        })
    }

    pub fn time(samples: Vec<Complex64>, spacing: f64) -> Result<Self> {
        Self::new(samples, spacing, Domain::Time)
    }

    pub fn frequency(samples: Vec<Complex64>, spacing: f64) -> Result<Self> {
        Self::new(samples, spacing, Domain::Frequency)
    }

    /// Time-domain sequence with unit sample spacing, for metric-only use.
    pub fn unit_time(samples: Vec<Complex64>) -> Result<Self> {
        Self::time(samples, 1.0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Modulation order of a [`Constellation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Some(Modulation::Qpsk),
            "16qam" | "qam16" => Some(Modulation::Qam16),
            "64qam" | "qam64" => Some(Modulation::Qam64),
            _ => None,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Gray-labelled square QAM constellation with unit average energy.
///
/// The label of a point is its bit group read MSB first; the first half of the
/// bits selects the in-phase level and the second half the quadrature level.
/// Per axis, Gray index 0 maps to the largest positive level, so the all-zero
/// QPSK label is `(1 + j)/sqrt(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let bits = modulation.bits_per_symbol();
        let axis_bits = bits / 2;
        let levels = 1usize << axis_bits;
        let order = 1usize << bits;
        let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
        let level = |label: usize| -> f64 {
            let idx = inverse_gray(label);
            (levels as f64 - 1.0) - 2.0 * idx as f64
        };
        let points = (0..order)
            .map(|label| {
                let i_label = label >> axis_bits;
                let q_label = label & (levels - 1);
                Complex64::new(level(i_label), level(q_label)) * scale
            })
            .collect();
        Self { modulation, points }
    }

    pub fn qpsk() -> Self {
        Self::new(Modulation::Qpsk)
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn is_constant_modulus(&self) -> bool {
        let r0 = self.points[0].norm();
        self.points.iter().all(|p| (p.norm() - r0).abs() < 1e-12)
    }

    /// Draws `n` equiprobable symbols.
    pub fn random_symbols<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Complex64> {
        let m = self.order();
        (0..n).map(|_| self.points[rng.random_range(0..m)]).collect()
    }
}

fn inverse_gray(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Maps a bit list (one `bool` per bit) onto constellation points, MSB first.
pub fn map_bits(bits: &[bool], constellation: &Constellation) -> Result<Vec<Complex64>> {
    let k = constellation.bits_per_symbol();
    if bits.len() % k != 0 {
        return Err(Error::LengthMismatch {
            expected: bits.len().div_ceil(k) * k,
            got: bits.len(),
        });
    }
    Ok(bits
        .chunks_exact(k)
        .map(|group| {
            let label = group.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
            constellation.points[label]
        })
        .collect())
}

/// Same as [`map_bits`] but wraps the result as a frequency-domain sequence.
pub fn map_bits_sequence(bits: &[bool], constellation: &Constellation, spacing: f64) -> Result<ComplexSequence> {
    ComplexSequence::frequency(map_bits(bits, constellation)?, spacing)
}

/// In-place unnormalized forward FFT.
pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place unnormalized inverse FFT.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// Unitary forward DFT of a slice.
pub fn dft_slice(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    let s = (x.len() as f64).sqrt().recip();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Unitary inverse DFT of a slice.
pub fn idft_slice(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    ifft_in_place(&mut buf);
    let s = (x.len() as f64).sqrt().recip();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Unitary DFT. A time sequence with spacing `dt` maps to a frequency sequence
/// with spacing `1/(N dt)`, and vice versa.
pub fn dft(x: &ComplexSequence) -> ComplexSequence {
    let n = x.len() as f64;
    ComplexSequence {
        samples: dft_slice(&x.samples),
        spacing: 1.0 / (n * x.spacing),
        domain: Domain::Frequency,
    }
}

/// Unitary inverse DFT, the exact inverse of [`dft`].
pub fn idft(x: &ComplexSequence) -> ComplexSequence {
    let n = x.len() as f64;
    ComplexSequence {
        samples: idft_slice(&x.samples),
        spacing: 1.0 / (n * x.spacing),
        domain: Domain::Time,
    }
}

/// Aperiodic autocorrelation `r(l) = sum_k conj(x_k) x_{k+l}` for `l = 0..N-1`,
/// computed through a zero-padded FFT.
pub fn acorr_aperiodic_slice(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let len = (2 * n - 1).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..n].copy_from_slice(x);
    fft_in_place(&mut buf);
    buf.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
    ifft_in_place(&mut buf);
    let s = 1.0 / len as f64;
    buf.truncate(n);
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Circular autocorrelation `r_c(l) = sum_k conj(x_k) x_{(k+l) mod N}`.
pub fn acorr_circular_slice(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    buf.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
    ifft_in_place(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

pub fn acorr_aperiodic(x: &ComplexSequence) -> ComplexSequence {
    ComplexSequence {
        samples: acorr_aperiodic_slice(&x.samples),
        spacing: x.spacing,
        domain: x.domain,
    }
}

pub fn acorr_circular(x: &ComplexSequence) -> ComplexSequence {
    ComplexSequence {
        samples: acorr_circular_slice(&x.samples),
        spacing: x.spacing,
        domain: x.domain,
    }
}

/// Periodogram `|X[k]|^2` under the unitary DFT; sums to the signal energy.
pub fn psd_slice(x: &[Complex64]) -> Vec<f64> {
    dft_slice(x).iter().map(|v| v.norm_sqr()).collect()
}

pub fn psd(x: &ComplexSequence) -> Vec<f64> {
    psd_slice(&x.samples)
}
