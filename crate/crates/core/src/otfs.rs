//! OTFS delay-Doppler grids, the ISFFT/SFFT pair, rectangular-pulse synthesis
//! and embedded pilot placement.
//!
//! Grids are stored row-major with the delay index as the row (`M_tau` rows)
//! and the Doppler index as the column (`N_nu` columns). After the ISFFT the
//! row index is the subcarrier and the column index is the time slot.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::rng::substream;
use crate::sensing::{isl_slice, IslMode};
use crate::signal::{dft_slice, idft_slice, ComplexSequence, Constellation};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Power summed across each row.
    pub fn row_power(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|v| v.norm_sqr()).sum())
            .collect()
    }

    fn map_columns(&mut self, f: impl Fn(&[Complex64]) -> Vec<Complex64>) {
        for c in 0..self.cols {
            let out = f(&self.column(c));
            for (r, v) in out.into_iter().enumerate() {
                self.set(r, c, v);
            }
        }
    }

    fn map_rows(&mut self, f: impl Fn(&[Complex64]) -> Vec<Complex64>) {
        for r in 0..self.rows {
            let out = f(self.row(r));
            self.data[r * self.cols..(r + 1) * self.cols].copy_from_slice(&out);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid {
    symbols: CMatrix,
    pilot_mask: Vec<bool>,
    /// Average data-cell energy.
    pub e_s: f64,
    /// Energy of each pilot cell.
    pub e_p: f64,
}

impl DdGrid {
    pub fn zeros(m_tau: usize, n_nu: usize, e_s: f64, e_p: f64) -> Result<Self> {
        if m_tau == 0 || n_nu == 0 {
            return Err(Error::param("grid", "dimensions must be positive"));
        }
        Ok(Self {
            symbols: CMatrix::zeros(m_tau, n_nu),
            pilot_mask: vec![false; m_tau * n_nu],
            e_s,
            e_p,
        })
    }

    /// Grid filled with random QPSK data at energy `e_s` per cell.
    pub fn random_data<R: Rng + ?Sized>(m_tau: usize, n_nu: usize, e_s: f64, e_p: f64, rng: &mut R) -> Result<Self> {
        let mut grid = Self::zeros(m_tau, n_nu, e_s, e_p)?;
        let amp = e_s.sqrt();
        let syms = Constellation::qpsk().random_symbols(m_tau * n_nu, rng);
        for (d, s) in grid.symbols.data.iter_mut().zip(syms) {
            *d = s * amp;
        }
        Ok(grid)
    }

    pub fn from_symbols(symbols: CMatrix, e_s: f64, e_p: f64) -> Self {
        let n = symbols.rows() * symbols.cols();
        Self {
            symbols,
            pilot_mask: vec![false; n],
            e_s,
            e_p,
        }
    }

    pub fn m_tau(&self) -> usize {
        self.symbols.rows()
    }

    pub fn n_nu(&self) -> usize {
        self.symbols.cols()
    }

    pub fn symbols(&self) -> &CMatrix {
        &self.symbols
    }

    pub fn is_pilot(&self, delay: usize, doppler: usize) -> bool {
        self.pilot_mask[delay * self.n_nu() + doppler]
    }

    pub fn pilot_cells(&self) -> Vec<(usize, usize)> {
        let n = self.n_nu();
        self.pilot_mask
            .iter()
            .enumerate()
            .filter(|(_, p)| **p)
            .map(|(i, _)| (i / n, i % n))
            .collect()
    }

    pub fn pilot_count(&self) -> usize {
        self.pilot_mask.iter().filter(|p| **p).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotAxis {
    Delay,
    Doppler,
}

impl PilotAxis {
    pub fn name(self) -> &'static str {
        match self {
            PilotAxis::Delay => "delay",
            PilotAxis::Doppler => "doppler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PilotScheme {
    pub axis: PilotAxis,
    pub count: usize,
    /// `(delay index, Doppler index)` of the first pilot.
    pub anchor: (usize, usize),
}

impl PilotScheme {
    pub fn new(axis: PilotAxis, count: usize) -> Self {
        Self {
            axis,
            count,
            anchor: (0, 0),
        }
    }

    /// Cells occupied on an `m_tau x n_nu` grid. Pilots are spaced by
    /// `axis_len / count` cells from the anchor, wrapping around the axis.
    pub fn cells(&self, m_tau: usize, n_nu: usize) -> Result<Vec<(usize, usize)>> {
        let (d0, v0) = self.anchor;
        if d0 >= m_tau || v0 >= n_nu {
            return Err(Error::PilotOutOfRange(format!(
                "anchor ({d0}, {v0}) outside {m_tau}x{n_nu} grid"
            )));
        }
        let len = match self.axis {
            PilotAxis::Delay => m_tau,
            PilotAxis::Doppler => n_nu,
        };
        if self.count == 0 || self.count > len {
            return Err(Error::PilotOutOfRange(format!(
                "{} pilots on a {} axis of length {len}",
                self.count,
                self.axis.name()
            )));
        }
        let step = len / self.count;
        Ok((0..self.count)
            .map(|k| match self.axis {
                PilotAxis::Delay => ((d0 + k * step) % m_tau, v0),
                PilotAxis::Doppler => (d0, (v0 + k * step) % n_nu),
            })
            .collect())
    }
}

/// Overwrites the scheme's cells with zero-phase pilots of energy `e_p`.
pub fn place_pilots(grid: &DdGrid, scheme: &PilotScheme) -> Result<DdGrid> {
    let cells = scheme.cells(grid.m_tau(), grid.n_nu())?;
    let mut out = grid.clone();
    let amp = Complex64::new(grid.e_p.sqrt(), 0.0);
    for (d, v) in cells {
        if out.is_pilot(d, v) {
            return Err(Error::PilotOverlap(d, v));
        }
        out.symbols.set(d, v, amp);
        let n = out.n_nu();
        out.pilot_mask[d * n + v] = true;
    }
    Ok(out)
}

/// `X_TF = F_M X_DD F_N^H` with unitary DFT matrices.
pub fn isfft(grid: &DdGrid) -> CMatrix {
    let mut m = grid.symbols.clone();
    m.map_columns(dft_slice);
    m.map_rows(idft_slice);
    m
}

/// Inverse of [`isfft`].
pub fn sfft(tf: &CMatrix) -> CMatrix {
    let mut m = tf.clone();
    m.map_columns(idft_slice);
    m.map_rows(dft_slice);
    m
}

/// Rectangular-pulse Heisenberg transform at critical sampling: each TF
/// column becomes `M_tau` samples via an inverse DFT across frequency, and the
/// columns are concatenated. Sample spacing is `1 / (M_tau * df)`.
pub fn synthesize_time(grid: &DdGrid, subcarrier_spacing: f64) -> Result<ComplexSequence> {
    if !(subcarrier_spacing > 0.0) {
        return Err(Error::param("subcarrier_spacing", "must be positive"));
    }
    let tf = isfft(grid);
    let mut out = Vec::with_capacity(tf.rows() * tf.cols());
    for c in 0..tf.cols() {
        out.extend(idft_slice(&tf.column(c)));
    }
    ComplexSequence::time(out, 1.0 / (grid.m_tau() as f64 * subcarrier_spacing))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotIslSetup {
    pub m_tau: usize,
    pub n_nu: usize,
    pub subcarrier_spacing: f64,
    pub e_s: f64,
    pub e_p: f64,
}

impl Default for PilotIslSetup {
    fn default() -> Self {
        Self {
            m_tau: 80,
            n_nu: 80,
            subcarrier_spacing: 2.5e6,
            e_s: 1.0,
            e_p: 0.15,
        }
    }
}

/// Aperiodic time-domain ISL for each pilot count, indexed `[count][trial]`.
/// Trial `t` uses the same data grid for every count.
pub fn pilot_isl_trials(setup: &PilotIslSetup, axis: PilotAxis, counts: &[usize], trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let per_trial = map_indexed(trials, |t| -> Result<Vec<f64>> {
        let data = DdGrid::random_data(setup.m_tau, setup.n_nu, setup.e_s, setup.e_p, &mut substream(seed, t as u64))?;
        counts
            .iter()
            .map(|&c| {
                let g = place_pilots(&data, &PilotScheme::new(axis, c))?;
                let x = synthesize_time(&g, setup.subcarrier_spacing)?;
                isl_slice(x.samples(), IslMode::Aperiodic)
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((0..counts.len())
        .map(|c| per_trial.iter().map(|row| row[c]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn delta(m: usize, n: usize) -> DdGrid {
        let mut g = DdGrid::zeros(m, n, 1.0, 1.0).unwrap();
        g.symbols.set(0, 0, Complex64::new(1.0, 0.0));
        g
    }

    // X_TF[k, l] = sum_{a,b} W_M^{ka} X[a,b] W_N^{-lb} / sqrt(MN)
    fn isfft_direct(x: &CMatrix) -> CMatrix {
        let (m, n) = (x.rows(), x.cols());
        let mut out = CMatrix::zeros(m, n);
        for k in 0..m {
            for l in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..m {
                    for b in 0..n {
                        let ph = -2.0 * std::f64::consts::PI * (k * a) as f64 / m as f64
                            + 2.0 * std::f64::consts::PI * (l * b) as f64 / n as f64;
                        acc += x.get(a, b) * Complex64::from_polar(1.0, ph);
                    }
                }
                out.set(k, l, acc / ((m * n) as f64).sqrt());
            }
        }
        out
    }

    #[test]
    fn delta_maps_to_constant_modulus() {
        let tf = isfft(&delta(8, 6));
        let expect = 1.0 / 48f64.sqrt();
        assert!(tf.as_slice().iter().all(|v| (v.norm() - expect).abs() < 1e-12));
    }

    #[test]
    fn isfft_matches_direct_sum_and_round_trips() {
        let g = DdGrid::random_data(6, 5, 1.0, 0.0, &mut substream(3, 0)).unwrap();
        let fast = isfft(&g);
        let slow = isfft_direct(g.symbols());
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).norm() < 1e-10);
        }
        let back = sfft(&fast);
        for (a, b) in back.as_slice().iter().zip(g.symbols().as_slice()) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_relative_eq!(fast.energy(), g.symbols().energy(), max_relative = 1e-12);
    }

    #[test]
    fn two_delay_pilots_populate_alternate_rows() {
        let (m, n) = (8, 4);
        let g = place_pilots(&DdGrid::zeros(m, n, 1.0, 1.0).unwrap(), &PilotScheme::new(PilotAxis::Delay, 2)).unwrap();
        assert_eq!(g.pilot_cells(), vec![(0, 0), (4, 0)]);
        let slow = isfft_direct(g.symbols());
        let p = isfft(&g).row_power();
        for (r, v) in p.iter().enumerate() {
            let oracle: f64 = slow.row(r).iter().map(|z| z.norm_sqr()).sum();
            assert!((v - oracle).abs() < 1e-12);
            if r % 2 == 1 {
                assert!(*v < 1e-20);
            } else {
                assert!(*v > 0.1);
            }
        }
    }

    #[test]
    fn synthesis_preserves_energy_and_zero() {
        let g = DdGrid::random_data(16, 8, 1.0, 0.0, &mut substream(4, 0)).unwrap();
        let t = synthesize_time(&g, 2.5e6).unwrap();
        assert_eq!(t.len(), 128);
        assert_relative_eq!(t.energy(), g.symbols().energy(), max_relative = 1e-9);
        assert_relative_eq!(t.spacing(), 1.0 / (16.0 * 2.5e6));
        let z = synthesize_time(&DdGrid::zeros(4, 4, 1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(z.samples().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn single_pilot_gives_flat_per_column_spectrum() {
        let tf = isfft(&delta(16, 4));
        for c in 0..4 {
            let col = tf.column(c);
            let p0 = col[0].norm_sqr();
            assert!(col.iter().all(|v| (v.norm_sqr() - p0).abs() < 1e-14));
        }
    }

    #[test]
    fn pilot_layouts() {
        let base = DdGrid::random_data(80, 80, 1.0, 0.15, &mut substream(5, 0)).unwrap();
        let one = place_pilots(&base, &PilotScheme::new(PilotAxis::Delay, 1)).unwrap();
        assert_eq!(one.pilot_count(), 1);
        let forty = place_pilots(&base, &PilotScheme::new(PilotAxis::Delay, 40)).unwrap();
        let delays: Vec<usize> = forty.pilot_cells().iter().map(|c| c.0).collect();
        assert_eq!(delays, (0..80).step_by(2).collect::<Vec<_>>());
        assert_relative_eq!(forty.symbols().get(2, 0).re, 0.15f64.sqrt());
        let dop = place_pilots(&base, &PilotScheme::new(PilotAxis::Doppler, 40)).unwrap();
        assert!(dop.pilot_cells().iter().all(|c| c.0 == 0));
    }

    #[test]
    fn pilot_errors() {
        let g = DdGrid::zeros(8, 8, 1.0, 1.0).unwrap();
        assert!(matches!(
            place_pilots(&g, &PilotScheme::new(PilotAxis::Delay, 9)),
            Err(Error::PilotOutOfRange(_))
        ));
        let mut s = PilotScheme::new(PilotAxis::Delay, 1);
        s.anchor = (8, 0);
        assert!(matches!(place_pilots(&g, &s), Err(Error::PilotOutOfRange(_))));
        let once = place_pilots(&g, &PilotScheme::new(PilotAxis::Delay, 2)).unwrap();
        assert!(matches!(
            place_pilots(&once, &PilotScheme::new(PilotAxis::Doppler, 2)),
            Err(Error::PilotOverlap(0, 0))
        ));
    }

    #[test]
    fn pilot_trials_share_data_across_counts() {
        let setup = PilotIslSetup {
            m_tau: 16,
            n_nu: 16,
            ..Default::default()
        };
        let v = pilot_isl_trials(&setup, PilotAxis::Delay, &[1, 1, 8], 5, 3).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], v[1]);
        assert_ne!(v[0], v[2]);
        assert!(v.iter().flatten().all(|x| *x > 0.0 && x.is_finite()));
    }

    #[test]
    fn doppler_pilots_keep_row_marginal_flat_in_expectation() {
        let (m, trials) = (16, 2000);
        let mut rng = substream(6, 0);
        let mut single = vec![0.0; m];
        let mut multi = vec![0.0; m];
        for _ in 0..trials {
            let g = DdGrid::random_data(m, m, 1.0, 0.15, &mut rng).unwrap();
            let a = isfft(&place_pilots(&g, &PilotScheme::new(PilotAxis::Doppler, 1)).unwrap()).row_power();
            let b = isfft(&place_pilots(&g, &PilotScheme::new(PilotAxis::Doppler, 8)).unwrap()).row_power();
            for r in 0..m {
                single[r] += a[r] / trials as f64;
                multi[r] += b[r] / trials as f64;
            }
        }
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s * v.len() as f64).collect::<Vec<_>>()
        };
        for (a, b) in norm(&single).iter().zip(norm(&multi)) {
            assert!((a - 1.0).abs() < 0.05 && (b - 1.0).abs() < 0.05, "{a} {b}");
        }
    }
}
